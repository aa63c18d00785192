use serde::{Deserialize, Serialize};

use super::curve::{iterate_curve, CurveDisk};
use crate::dynkernel::SystemSpec;
use crate::error::{invalid, Error, Result};
use crate::hyptimes::sigma_hyperbolic_times;

/// `2 log(delta / (2 delta1)) / log sigma`.
pub fn min_time_bound(delta: f64, delta1: f64, sigma: f64) -> f64 {
    2.0 * (delta / (2.0 * delta1)).ln() / sigma.ln()
}

/// Smallest admissible pre-ball time: `ceil(min_time_bound) + 1`, at least 1.
pub fn min_admissible_time(delta: f64, delta1: f64, sigma: f64) -> usize {
    let b = min_time_bound(delta, delta1, sigma);
    if b.is_nan() || b >= usize::MAX as f64 {
        usize::MAX
    } else if b > 0.0 {
        b.ceil() as usize + 1
    } else {
        1
    }
}

/// `exp(L delta1 / (1 - sigma^(zeta/2)))`, `+inf` once it overflows.
pub fn c2_bound(l: f64, delta1: f64, sigma: f64, zeta: f64) -> f64 {
    if l == 0.0 {
        return 1.0;
    }
    let v = (l * delta1 / (1.0 - sigma.powf(zeta / 2.0))).exp();
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// A hyperbolic pre-ball on a host curve.
///
/// Windows are seed-parameter intervals of the host; `history[j]` is the
/// `V` window after `j` iterates (only the final curve is kept by
/// [`find_preball_final`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PreBall {
    pub center_param: f64,
    pub center_index: usize,
    pub time: usize,
    pub sigma: f64,
    pub delta1: f64,
    pub v: (f64, f64),
    pub w: (f64, f64),
    pub history: Vec<CurveDisk>,
}

impl PreBall {
    pub fn final_curve(&self) -> &CurveDisk {
        self.history.last().expect("pre-ball history is never empty")
    }

    /// Arc-radius of the image window on each side of the centre.
    pub fn image_radii(&self) -> (f64, f64) {
        let c = self.final_curve();
        let a = c.arclength_at_param(self.center_param);
        (a - c.arclength_at_param(self.v.0), c.arclength_at_param(self.v.1) - a)
    }

    pub fn cover_window(&self) -> crate::covermeasure::CoverWindow {
        crate::covermeasure::CoverWindow {
            time: self.time,
            center: self.center_param,
            v: self.v,
            w: self.w,
        }
    }
}

/// Builds `V_n` and `W_n` around host vertex `center_index`.
///
/// The host must be an un-iterated curve. The window is grown in seed
/// parameter until its `n`-th image reaches arc-radius `delta1` on both
/// sides, then both windows are cut by inverse interpolation and `V_n` is
/// iterated again so that its history starts exactly at the window.
pub fn find_preball(
    system: &SystemSpec,
    host: &CurveDisk,
    center_index: usize,
    n: usize,
    sigma: f64,
    delta1: f64,
) -> Result<PreBall> {
    build(system, host, center_index, n, sigma, delta1, true)
}

/// As [`find_preball`] but keeping only the final image of `V_n`.
pub fn find_preball_final(
    system: &SystemSpec,
    host: &CurveDisk,
    center_index: usize,
    n: usize,
    sigma: f64,
    delta1: f64,
) -> Result<PreBall> {
    build(system, host, center_index, n, sigma, delta1, false)
}

fn iterate_n(system: &SystemSpec, curve: CurveDisk, n: usize, keep: bool) -> Result<Vec<CurveDisk>> {
    let mut out = vec![curve];
    for _ in 0..n {
        let next = iterate_curve(system, out.last().unwrap())?;
        if !keep {
            out.clear();
        }
        out.push(next);
    }
    Ok(out)
}

fn build(
    system: &SystemSpec,
    host: &CurveDisk,
    center_index: usize,
    n: usize,
    sigma: f64,
    delta1: f64,
    keep_history: bool,
) -> Result<PreBall> {
    if host.steps() != 0 {
        return Err(invalid("pre-balls are built on an un-iterated host curve"));
    }
    if center_index >= host.len() || n == 0 {
        return Err(invalid("centre index out of range or zero time"));
    }
    if !(sigma > 0.0 && sigma < 1.0 && delta1 > 0.0) {
        return Err(invalid("need sigma in (0, 1) and delta1 > 0"));
    }
    let sc = host.params()[center_index];
    let series = tangent_series(system, host, sc, n)?;
    if sigma_hyperbolic_times(&series, sigma)?.last() != Some(&n) {
        return Err(Error::NotHyperbolicTime { n, sigma });
    }
    let arc = host.cum_arclength();
    let to_boundary = (arc[center_index] - arc[0]).min(arc[host.len() - 1] - arc[center_index]);
    let n0 = min_admissible_time(2.0 * to_boundary, delta1, sigma);
    if n < n0 {
        return Err(Error::TimeTooSmall { n, n0 });
    }

    let (host_lo, host_hi) = (host.params()[0], host.params()[host.len() - 1]);
    let h = host.resolution();
    let expansion: f64 = series.iter().sum();
    let guess = 1.5 * delta1 * (-expansion).exp();
    let (mut left, mut right) = (guess, guess);
    let image = loop {
        let lo = (sc - left).max(host_lo);
        let hi = (sc + right).min(host_hi);
        let window = CurveDisk::over(*host.seed(), lo, hi, h, &[sc])?;
        let img = iterate_n(system, window, n, false)?.pop().unwrap();
        let c = img.arclength_at_param(sc);
        let (got_l, got_r) = (c, img.length() - c);
        if got_l >= delta1 && got_r >= delta1 {
            break img;
        }
        for (got, side, at_end) in [(got_l, &mut left, lo <= host_lo), (got_r, &mut right, hi >= host_hi)] {
            if got < delta1 {
                if at_end {
                    return Err(Error::BoundaryHit {
                        reached: got,
                        needed: delta1,
                    });
                }
                *side *= (1.1 * delta1 / got.max(f64::MIN_POSITIVE)).clamp(2.0, 1e6);
            }
        }
    };
    let c = image.arclength_at_param(sc);
    let v = (
        image.param_at_arclength(c - delta1),
        image.param_at_arclength(c + delta1),
    );
    let w = (
        image.param_at_arclength(c - delta1 / 4.0),
        image.param_at_arclength(c + delta1 / 4.0),
    );
    if !(v.0 <= w.0 && w.0 < sc && sc < w.1 && w.1 <= v.1) {
        return Err(Error::InconsistentWindows(format!("V = {v:?}, W = {w:?}, centre {sc}")));
    }
    let window = CurveDisk::over(*host.seed(), v.0, v.1, h, &[sc, w.0, w.1])?;
    let history = iterate_n(system, window, n, keep_history)?;
    let ball = PreBall {
        center_param: sc,
        center_index,
        time: n,
        sigma,
        delta1,
        v,
        w,
        history,
    };
    let (rl, rr) = ball.image_radii();
    let tol = 2.0 * h;
    if (rl - delta1).abs() > tol || (rr - delta1).abs() > tol {
        return Err(Error::InconsistentWindows(format!(
            "image radii ({rl}, {rr}) differ from {delta1} by more than {tol}"
        )));
    }
    Ok(ball)
}

/// Log stretch of the host tangent at `s` under each of the first `n` steps.
pub fn tangent_series(system: &SystemSpec, host: &CurveDisk, s: f64, n: usize) -> Result<Vec<f64>> {
    let mut series = Vec::with_capacity(n);
    let mut p = host.seed().point(s);
    let mut t = host.seed().tangent(s);
    for _ in 0..n {
        let w = system.jacobian(p)?.apply(t);
        let stretch = w.norm();
        series.push(stretch.ln());
        t = (1.0 / stretch) * w;
        p = system.lift_forward(p)?;
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Largest `ratio - sigma^(k/2)` seen (negative when every check passes).
    pub max_violation: f64,
    /// Smallest `sigma^(k/2) - ratio` seen.
    pub margin: f64,
    pub checked: usize,
    pub pass: bool,
}

/// Checks `dist_{n-k}(y, z) <= sigma^(k/2) dist_n(y, z)` for every pair of
/// seed parameters in `pairs` and every `1 <= k <= n`.
///
/// Distances are arc-lengths along the stored polylines. The tolerance is a
/// relative `1e-6` plus the interpolation error of the earlier curve.
pub fn backward_contraction_check(ball: &PreBall, pairs: &[(f64, f64)]) -> Result<ContractionReport> {
    let n = ball.time;
    if ball.history.len() != n + 1 {
        return Err(invalid("backward check needs the full pre-ball history"));
    }
    let last = &ball.history[n];
    let errors: Vec<f64> = ball.history.iter().map(|c| c.interpolation_error()).collect();
    let mut report = ContractionReport {
        max_violation: f64::NEG_INFINITY,
        margin: f64::INFINITY,
        checked: 0,
        pass: true,
    };
    for &(y, z) in pairs {
        let dn = (last.arclength_at_param(y) - last.arclength_at_param(z)).abs();
        if dn == 0.0 {
            continue;
        }
        for k in 1..=n {
            let earlier = &ball.history[n - k];
            let d = (earlier.arclength_at_param(y) - earlier.arclength_at_param(z)).abs();
            let ratio = d / dn;
            let bound = ball.sigma.powf(k as f64 / 2.0);
            let tol = 1e-6 * bound + 2.0 * (errors[n - k] + bound * errors[n]) / dn;
            report.max_violation = report.max_violation.max(ratio - bound);
            report.margin = report.margin.min(bound - ratio);
            report.pass &= ratio <= bound + tol;
            report.checked += 1;
        }
    }
    Ok(report)
}

/// `sup |det Df^n| / inf |det Df^n|` over the image of `V_n`. Interior
/// extremes are located by a parabola through the extreme vertex and its
/// neighbours, so the value does not depend on where vertices happen to fall.
pub fn distortion_ratio(ball: &PreBall) -> f64 {
    let last = ball.final_curve();
    let (params, lj) = (last.params(), last.cum_logjac());
    let imax = (0..lj.len()).max_by(|&a, &b| lj[a].total_cmp(&lj[b])).unwrap();
    let imin = (0..lj.len()).min_by(|&a, &b| lj[a].total_cmp(&lj[b])).unwrap();
    let hi = parabolic_extreme(params, lj, imax, 1.0);
    let lo = parabolic_extreme(params, lj, imin, -1.0);
    (hi - lo).exp()
}

/// Extreme value (`sign` = 1 for a maximum) of the parabola through vertex
/// `i` and its neighbours, or the vertex value when the parabola has no
/// extremum of that kind inside the bracket.
fn parabolic_extreme(x: &[f64], y: &[f64], i: usize, sign: f64) -> f64 {
    if i == 0 || i + 1 == x.len() {
        return y[i];
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let f01 = (y[i] - y[i - 1]) / (x1 - x0);
    let f12 = (y[i + 1] - y[i]) / (x2 - x1);
    let f012 = (f12 - f01) / (x2 - x0);
    if !(sign * f012 < 0.0) {
        return y[i];
    }
    let xs = 0.5 * (x0 + x1) - f01 / (2.0 * f012);
    if !(x0..=x2).contains(&xs) {
        return y[i];
    }
    let v = y[i - 1] + f01 * (xs - x0) + f012 * (xs - x0) * (xs - x1);
    if sign > 0.0 { v.max(y[i]) } else { v.min(y[i]) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelescopingReport {
    /// `log` of the Jacobian ratio between the two extreme vertices.
    pub log_ratio: f64,
    /// Sum over steps of the per-step log-stretch differences.
    pub telescoped: f64,
    /// `L * sum_j dist_j^zeta` along the two extreme orbits.
    pub holder_sum: f64,
    /// `L * (2 delta1)^zeta / (1 - sigma^(zeta/2))`.
    pub geometric_bound: f64,
    pub pass: bool,
}

/// Splits the distortion of `ball` into per-step log-stretch differences of
/// its two extreme vertices and bounds them with Hölder constant `l`.
pub fn distortion_telescoping(
    system: &SystemSpec,
    ball: &PreBall,
    l: f64,
    zeta: f64,
) -> Result<TelescopingReport> {
    let n = ball.time;
    if ball.history.len() != n + 1 {
        return Err(invalid("telescoping check needs the full pre-ball history"));
    }
    let last = ball.final_curve();
    let lj = last.cum_logjac();
    let imax = (0..lj.len()).max_by(|&a, &b| lj[a].total_cmp(&lj[b])).unwrap();
    let imin = (0..lj.len()).min_by(|&a, &b| lj[a].total_cmp(&lj[b])).unwrap();
    let (y, z) = (last.params()[imax], last.params()[imin]);
    let oy = last.orbit(system, y)?;
    let oz = last.orbit(system, z)?;
    let telescoped: f64 = oy.stretches.iter().zip(&oz.stretches).map(|(a, b)| a - b).sum();
    let holder_sum: f64 = (0..n)
        .map(|j| {
            let c = &ball.history[j];
            l * (c.arclength_at_param(y) - c.arclength_at_param(z)).abs().powf(zeta)
        })
        .sum();
    let h = last.resolution();
    let geometric_bound = l * (2.0 * ball.delta1 + 2.0 * h).powf(zeta)
        / (1.0 - ball.sigma.powf(zeta / 2.0));
    let log_ratio = lj[imax] - lj[imin];
    let slack = 1e-12 * (1.0 + log_ratio.abs());
    let pass = (telescoped - log_ratio).abs() <= slack
        && telescoped.abs() <= holder_sum * (1.0 + 1e-9) + slack
        && holder_sum <= geometric_bound * (1.0 + 1e-9);
    Ok(TelescopingReport {
        log_ratio,
        telescoped,
        holder_sum,
        geometric_bound,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diskflow::Seed;
    use crate::dynkernel::{cat_lambda_u, ConstantSplitting};
    use crate::geom::{Point2, Vec2};

    fn cat_host(h: f64) -> CurveDisk {
        let e_u = ConstantSplitting::cat().0.e_cu;
        CurveDisk::from_seed(Seed::segment(Point2::new(0.1, 0.1), e_u, 1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn bound_formulas() {
        assert!((min_time_bound(0.1, 0.1, 0.25) - 1.0).abs() < 1e-15);
        assert_eq!(min_time_bound(0.2, 0.1, 0.5), 0.0);
        assert!((min_time_bound(0.05, 0.1, 0.5) - 4.0).abs() < 1e-14);
        assert_eq!(min_admissible_time(0.2, 0.1, 0.5), 1);
        assert_eq!(min_admissible_time(0.05, 0.1, 0.5), 5);
        assert_eq!(c2_bound(0.0, 0.1, 0.25, 1.0), 1.0);
        assert!((c2_bound(1.0, 0.1, 0.25, 1.0) - 0.2f64.exp()).abs() < 1e-15);
        assert!((c2_bound(1.0, 0.1, 0.25, 1.0) - 1.2214).abs() < 1e-4);
        assert_eq!(c2_bound(1.0, 0.1, 1.0 - 1e-17, 1.0), f64::INFINITY);
        assert_eq!(c2_bound(1e3, 1.0, 0.999, 1.0), f64::INFINITY);
    }

    #[test]
    fn cat_preball_radius() {
        let host = cat_host(1e-3);
        let ball = find_preball(&SystemSpec::CatMap, &host, 500, 10, 0.5, 0.1).unwrap();
        let (rl, rr) = ball.image_radii();
        assert!((rl - 0.1).abs() < 2e-3 && (rr - 0.1).abs() < 2e-3);
        let expected = 0.1 / cat_lambda_u().powi(10);
        assert!(((ball.v.1 - ball.v.0) / 2.0 - expected).abs() < 1e-12);
        assert!(((ball.w.1 - ball.w.0) / 2.0 - expected / 4.0).abs() < 1e-12);
        assert_eq!(ball.history.len(), 11);
        assert_eq!(distortion_ratio(&ball), 1.0);
        let pairs = [(ball.v.0, ball.v.1), (ball.w.0, ball.center_param)];
        let rep = backward_contraction_check(&ball, &pairs).unwrap();
        assert!(rep.pass && rep.margin > 0.0, "{rep:?}");
        assert_eq!(rep.checked, 20);
    }

    #[test]
    fn horseshoe_preball_radius() {
        let sys = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        // [2/9, 7/27] stays in the bands for three steps
        let seed = Seed::segment(Point2::new(0.0, 0.5), Vec2::new(1.0, 0.0), 1.0 / 3.0).unwrap();
        let host = CurveDisk::over(seed, 0.0, 1.0 / 3.0, 1e-4, &[13.0 / 54.0]).unwrap();
        let c = host.index_of_param(13.0 / 54.0).unwrap();
        let ball = find_preball(&sys, &host, c, 3, 0.5, 0.1).unwrap();
        assert!(((ball.v.1 - ball.v.0) / 2.0 - 0.1 / 27.0).abs() < 1e-14);
        assert_eq!(distortion_ratio(&ball), 1.0);
        let rep = backward_contraction_check(&ball, &[(ball.v.0, ball.v.1)]).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn rejections() {
        let host = cat_host(1e-2);
        // sigma = 0.3 admits no hyperbolic time on the cat map
        assert!(matches!(
            find_preball(&SystemSpec::CatMap, &host, 50, 5, 0.3, 0.05),
            Err(Error::NotHyperbolicTime { .. })
        ));
        // centre one resolution step from the end: needs a larger time
        assert!(matches!(
            find_preball(&SystemSpec::CatMap, &host, 1, 2, 0.5, 0.05),
            Err(Error::TimeTooSmall { .. })
        ));
        // a centre on the boundary admits no time at all
        assert!(matches!(
            find_preball(&SystemSpec::CatMap, &host, 0, 30, 0.5, 0.05),
            Err(Error::TimeTooSmall { n0: usize::MAX, .. })
        ));
        assert_eq!(min_admissible_time(0.0, 0.05, 0.5), usize::MAX);
    }

    #[test]
    fn telescoping_on_perturbed_cat() {
        let sys = SystemSpec::perturbed_cat(0.01).unwrap();
        let host = cat_host(1e-3);
        let ball = find_preball(&sys, &host, 400, 8, 0.62, 0.05).unwrap();
        let ratio = distortion_ratio(&ball);
        assert!(ratio > 1.0 && ratio < 1.1);
        let l = crate::conefield::jacobian_holder_constant(&sys, &ball.history, 1.0).unwrap();
        let rep = distortion_telescoping(&sys, &ball, l, 1.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(ratio <= c2_bound(l, 0.05, 0.62, 1.0));
    }
}
