//! Cone fields around a splitting and the Hölder constants that control
//! curves tangent to them.
//!
//! A vector `v = alpha e_cs + beta e_cu` lies in the centre-unstable cone of
//! width `a` when `|alpha| <= a |beta|`, and in the centre-stable cone when
//! `|beta| <= a |alpha|`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diskflow::{iterate_curve, CurveDisk};
use crate::dynkernel::{domination_coefficient, SplittingField, SystemSpec};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::geom::{Point2, Vec2};

/// Default chart radius for Hölder estimates along curves.
pub const CHART_RADIUS: f64 = 0.2;

/// Pairs closer than this along the curve are ignored.
pub const PAIR_FLOOR: f64 = 1e-12;

/// Relative slack below which a cone margin counts as a violation.
const MARGIN_SLACK: f64 = 1e-8;

/// Descending grid of Hölder exponents tried by [`fit_holder_pair`].
pub const ZETA_GRID: [f64; 10] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeKind {
    Cu,
    Cs,
}

#[derive(Clone, Copy)]
pub struct ConeSpec<'a> {
    pub a: f64,
    pub field: &'a dyn SplittingField,
}

impl std::fmt::Debug for ConeSpec<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConeSpec").field("a", &self.a).finish_non_exhaustive()
    }
}

impl<'a> ConeSpec<'a> {
    pub fn new(a: f64, field: &'a dyn SplittingField) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(format!("cone width must be positive, got {a}")));
        }
        Ok(Self { a, field })
    }

    /// Membership together with the ratio `|off-axis| / |on-axis|`.
    pub fn ratio(&self, v: Vec2, p: Point2, which: ConeKind) -> Result<(bool, f64)> {
        if v.norm() == 0.0 {
            return Err(Error::ZeroVector);
        }
        let (alpha, beta) = self.field.splitting_at(p)?.decompose(v);
        let (off, on) = match which {
            ConeKind::Cu => (alpha.abs(), beta.abs()),
            ConeKind::Cs => (beta.abs(), alpha.abs()),
        };
        let ratio = if on == 0.0 { f64::INFINITY } else { off / on };
        Ok((off <= self.a * on, ratio))
    }

    /// Unit vectors on the two boundary rays and the axis of a cone.
    fn extremal(&self, p: Point2, which: ConeKind) -> Result<[Vec2; 3]> {
        let s = self.field.splitting_at(p)?;
        let (axis, side) = match which {
            ConeKind::Cu => (s.e_cu, s.e_cs),
            ConeKind::Cs => (s.e_cs, s.e_cu),
        };
        Ok([
            axis,
            (axis + self.a * side).normalized(),
            (axis - self.a * side).normalized(),
        ])
    }
}

pub fn cone_membership(v: Vec2, p: Point2, cone: &ConeSpec<'_>, which: ConeKind) -> Result<bool> {
    Ok(cone.ratio(v, p, which)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `(lambda a - ratio) / a` over the sample.
    pub worst_margin: f64,
}

/// Checks `Df(p) C_a^cu(p) ⊂ C_{lambda a}^cu(f(p))` on each sample, with
/// `lambda` the pointwise domination coefficient. Samples at which the
/// derivative or the splitting cannot be evaluated count as violations.
pub fn cone_invariance_report(
    system: &SystemSpec,
    cone: &ConeSpec<'_>,
    sample: &[(Point2, Vec2)],
    exec: Exec,
) -> ConeReport {
    let margins = exec.map(sample, |&(p, v)| -> Result<f64> {
        let lambda = domination_coefficient(system, p, cone.field)?;
        let image = system.jacobian(p)?.apply(v);
        let (_, ratio) = cone.ratio(image, system.forward(p)?, ConeKind::Cu)?;
        Ok((lambda * cone.a - ratio) / cone.a)
    });
    let mut report = ConeReport {
        samples: sample.len(),
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for m in margins {
        match m {
            Ok(m) => {
                report.worst_margin = report.worst_margin.min(m);
                if m < -MARGIN_SLACK {
                    report.violations += 1;
                }
            }
            Err(_) => report.violations += 1,
        }
    }
    report
}

/// A point in the natural domain of `system`: the torus, or the two bands
/// of the horseshoe.
pub fn random_domain_point<R: Rng>(system: &SystemSpec, rng: &mut R) -> Point2 {
    match *system {
        SystemSpec::AffineHorseshoe { mu, .. } => {
            let x = rng.gen::<f64>() / mu;
            let x = if rng.gen::<bool>() { x } else { 1.0 - x };
            Point2::new(x, rng.gen())
        }
        _ => Point2::new(rng.gen(), rng.gen()),
    }
}

/// `count` random unit vectors in `C_a^cu`, based at random domain points.
pub fn sample_cone_vectors<R: Rng>(
    system: &SystemSpec,
    cone: &ConeSpec<'_>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(Point2, Vec2)>> {
    (0..count)
        .map(|_| {
            let p = random_domain_point(system, rng);
            let s = cone.field.splitting_at(p)?;
            let t = cone.a * rng.gen_range(-1.0..=1.0);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Ok((p, (sign * (s.e_cu + t * s.e_cs)).normalized()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPair {
    pub zeta: f64,
    pub lambda1: f64,
}

/// `sup |Df v_cs| * |Df^{-1} v_cu|^(1 + zeta)` over the sample, with `v_cs`
/// extremal in the cs-cone at `z` and `v_cu` extremal in the cu-cone at
/// `f(z)`.
pub fn holder_sup(system: &SystemSpec, cone: &ConeSpec<'_>, sample: &[Point2], zeta: f64) -> Result<f64> {
    let mut sup = 0.0f64;
    for &z in sample {
        let df = system.jacobian(z)?;
        let df_inv = system.inverse_jacobian_at_image(z)?;
        let fz = system.forward(z)?;
        let cs = cone
            .extremal(z, ConeKind::Cs)?
            .iter()
            .map(|&v| df.apply(v).norm())
            .fold(0.0, f64::max);
        let cu = cone
            .extremal(fz, ConeKind::Cu)?
            .iter()
            .map(|&v| df_inv.apply(v).norm())
            .fold(0.0, f64::max);
        sup = sup.max(cs * cu.powf(1.0 + zeta));
    }
    Ok(sup)
}

/// Largest `zeta` on [`ZETA_GRID`] whose sup stays below one; `lambda1` is
/// that sup with 0.1% headroom so it also holds on nearby points.
pub fn fit_holder_pair(system: &SystemSpec, cone: &ConeSpec<'_>, sample: &[Point2]) -> Result<HolderPair> {
    fit_holder_pair_on(system, cone, sample, &ZETA_GRID)
}

/// As [`fit_holder_pair`] over a caller-supplied grid, tried largest first.
pub fn fit_holder_pair_on(
    system: &SystemSpec,
    cone: &ConeSpec<'_>,
    sample: &[Point2],
    grid: &[f64],
) -> Result<HolderPair> {
    if sample.is_empty() {
        return Err(invalid("empty sample"));
    }
    if grid.is_empty() || grid.iter().any(|z| !(*z > 0.0 && *z <= 1.0)) {
        return Err(invalid("zeta grid must be nonempty with values in (0, 1]"));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut best = f64::INFINITY;
    for zeta in grid {
        let lambda1 = holder_sup(system, cone, sample, zeta)? * (1.0 + 1e-3);
        if lambda1 < 1.0 {
            return Ok(HolderPair { zeta, lambda1 });
        }
        best = best.min(lambda1);
    }
    Err(Error::NoValidZeta { best })
}

/// Sorted-by-arc-length pair scan within the chart radius, calling `f(i, j, d)`.
fn pairs_within(arc: &[f64], mut f: impl FnMut(usize, usize, f64)) {
    for i in 0..arc.len() {
        for j in i + 1..arc.len() {
            let d = arc[j] - arc[i];
            if d > CHART_RADIUS {
                break;
            }
            if d >= PAIR_FLOOR {
                f(i, j, d);
            }
        }
    }
}

/// `max |tan(angle(t_x, t_y))| / d(x, y)^zeta` over vertex pairs within the
/// chart radius, `d` the arc-length between them.
pub fn kappa_estimate(curve: &CurveDisk, zeta: f64) -> Result<f64> {
    if curve.len() < 3 {
        return Err(invalid("kappa estimate needs at least three vertices"));
    }
    let t = curve.tangents();
    let mut kappa = 0.0f64;
    pairs_within(curve.cum_arclength(), |i, j, d| {
        let tan = (t[i].cross(t[j]) / t[i].dot(t[j])).abs();
        kappa = kappa.max(tan / d.powf(zeta));
    });
    Ok(kappa)
}

/// `sup |J(y) - J(z)| / d(y, z)^zeta` over all curves and vertex pairs
/// within the chart radius, where `J = log |Df t|` is the log stretch of
/// the next step along the curve tangent.
pub fn jacobian_holder_constant(system: &SystemSpec, curves: &[CurveDisk], zeta: f64) -> Result<f64> {
    let per_curve = Exec::default().map(curves, |c| -> Result<f64> {
        if c.len() < 3 {
            return Err(invalid("Hölder estimate needs at least three vertices"));
        }
        let j: Vec<f64> = c
            .vertices()
            .iter()
            .zip(c.tangents())
            .map(|(&p, &t)| Ok(system.jacobian(p)?.apply(t).norm().ln()))
            .collect::<Result<_>>()?;
        let mut l = 0.0f64;
        pairs_within(c.cum_arclength(), |a, b, d| {
            l = l.max((j[a] - j[b]).abs() / d.powf(zeta));
        });
        Ok(l)
    });
    per_curve
        .into_iter()
        .try_fold(0.0f64, |acc, l| Ok(acc.max(l?)))
}

/// Empirical constants of curve Hölder control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderBurnIn {
    pub kappas: Vec<f64>,
    /// Largest kappa over the measurement window after burn-in.
    pub c1: f64,
    /// First step from which kappa stays below `c1` through the window.
    pub n0: usize,
    /// Every held-out iterate after the window keeps kappa at or below `c1`.
    pub persistent: bool,
}

/// Iterates `curve` for `burn_in + window + held_out` steps, trimming each
/// iterate to arc-radius `radius` about its middle vertex, and measures
/// kappa along the way.
pub fn holder_burn_in(
    system: &SystemSpec,
    curve: &CurveDisk,
    zeta: f64,
    burn_in: usize,
    window: usize,
    held_out: usize,
    radius: f64,
) -> Result<HolderBurnIn> {
    if window == 0 {
        return Err(invalid("measurement window must be nonempty"));
    }
    let total = burn_in + window + held_out;
    let mut c = curve.clone();
    let mut kappas = vec![kappa_estimate(&c, zeta)?];
    for _ in 0..total {
        let next = iterate_curve(system, &c)?;
        c = next.trim_to_radius(next.len() / 2, radius)?;
        kappas.push(kappa_estimate(&c, zeta)?);
    }
    let measured = &kappas[burn_in..burn_in + window];
    let c1 = measured.iter().copied().fold(0.0, f64::max);
    let n0 = (0..burn_in + window)
        .find(|&k| kappas[k..burn_in + window].iter().all(|&v| v <= c1))
        .unwrap_or(burn_in);
    let persistent = kappas[burn_in + window..]
        .iter()
        .all(|&v| v <= c1);
    Ok(HolderBurnIn {
        kappas,
        c1,
        n0,
        persistent,
    })
}

/// Summary constants reported for a system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct HolderParams {
    pub zeta: f64,
    pub lambda1: f64,
    pub C1: f64,
    pub L: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diskflow::Seed;
    use crate::dynkernel::{cat_lambda_s, ConstantSplitting, PowerSplitting};
    use crate::rng::stream;

    #[test]
    fn membership_examples() {
        let field = ConstantSplitting::cat();
        let s = field.0;
        let p = Point2::new(0.3, 0.4);
        let wide = ConeSpec::new(0.1, &field).unwrap();
        let narrow = ConeSpec::new(0.01, &field).unwrap();
        assert!(cone_membership(s.e_cu, p, &wide, ConeKind::Cu).unwrap());
        assert!(!cone_membership(s.e_cs, p, &wide, ConeKind::Cu).unwrap());
        assert!(cone_membership(s.e_cs, p, &wide, ConeKind::Cs).unwrap());
        let v = s.e_cu + 0.05 * s.e_cs;
        assert!(cone_membership(v, p, &wide, ConeKind::Cu).unwrap());
        assert!(!cone_membership(v, p, &narrow, ConeKind::Cu).unwrap());
        assert_eq!(
            cone_membership(Vec2::default(), p, &wide, ConeKind::Cu),
            Err(Error::ZeroVector)
        );
        assert!(ConeSpec::new(0.0, &field).is_err());
    }

    #[test]
    fn invariance_on_cat_and_horseshoe() {
        let mut rng = stream(7, 0);
        let cat = ConstantSplitting::cat();
        let cone = ConeSpec::new(0.1, &cat).unwrap();
        let sample = sample_cone_vectors(&SystemSpec::CatMap, &cone, 2000, &mut rng).unwrap();
        let rep = cone_invariance_report(&SystemSpec::CatMap, &cone, &sample, Exec::Sequential);
        assert_eq!(rep.violations, 0);
        assert!(rep.worst_margin > -1e-8);

        let hs = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        let axes = ConstantSplitting::axes();
        let cone = ConeSpec::new(0.5, &axes).unwrap();
        let sample = sample_cone_vectors(&hs, &cone, 2000, &mut rng).unwrap();
        let rep = cone_invariance_report(&hs, &cone, &sample, Exec::Sequential);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn broken_domination_is_detected() {
        let mut rng = stream(7, 1);
        let sys = SystemSpec::perturbed_cat(10.0).unwrap();
        let cat = ConstantSplitting::cat();
        let cone = ConeSpec::new(0.1, &cat).unwrap();
        let sample = sample_cone_vectors(&sys, &cone, 2000, &mut rng).unwrap();
        let rep = cone_invariance_report(&sys, &cone, &sample, Exec::Sequential);
        assert!(rep.violations > 0, "{rep:?}");
    }

    #[test]
    fn holder_pair_examples() {
        let mut rng = stream(3, 0);
        let pts: Vec<Point2> = (0..200).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
        let cat = ConstantSplitting::cat();
        let thin = ConeSpec::new(1e-7, &cat).unwrap();
        let fit = fit_holder_pair(&SystemSpec::CatMap, &thin, &pts).unwrap();
        assert_eq!(fit.zeta, 1.0);
        assert!((fit.lambda1 / cat_lambda_s().powi(3) - 1.0).abs() < 2e-3);
        assert!((fit.lambda1 - 0.05573).abs() < 2e-4);

        let hs = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        let axes = ConstantSplitting::axes();
        let thin = ConeSpec::new(1e-7, &axes).unwrap();
        let band_pts: Vec<Point2> = (0..50).map(|i| Point2::new(i as f64 / 200.0, 0.5)).collect();
        let fit = fit_holder_pair(&hs, &thin, &band_pts).unwrap();
        assert_eq!(fit.zeta, 1.0);
        assert!((fit.lambda1 - 0.25 / 9.0).abs() < 1e-4);
        assert!(fit_holder_pair(&hs, &thin, &[]).is_err());
    }

    #[test]
    fn kappa_examples() {
        let seg = Seed::segment(Point2::new(0.1, 0.1), Vec2::new(1.0, 2.0), 0.5).unwrap();
        let c = CurveDisk::from_seed(seg, 1e-2).unwrap();
        assert_eq!(kappa_estimate(&c, 1.0).unwrap(), 0.0);
        let img = iterate_curve(&SystemSpec::CatMap, &c).unwrap();
        assert!(kappa_estimate(&img, 1.0).unwrap() < 1e-12);
        let arc = Seed::arc(Point2::new(0.5, 0.5), 1.0, 0.0, 1.0).unwrap();
        let c = CurveDisk::from_seed(arc, 1e-2).unwrap();
        let k = kappa_estimate(&c, 1.0).unwrap();
        assert!((k - 1.0).abs() < 0.05, "{k}");
        assert_eq!(
            jacobian_holder_constant(&SystemSpec::CatMap, &[img], 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn perturbed_jacobian_constant_is_finite() {
        let sys = SystemSpec::perturbed_cat(0.01).unwrap();
        let field = PowerSplitting::new(sys, 30);
        let e = field.splitting_at(Point2::new(0.3, 0.3)).unwrap().e_cu;
        let seed = Seed::segment(Point2::new(0.3, 0.3), e, 0.02).unwrap();
        let c = CurveDisk::from_seed(seed, 1e-3).unwrap();
        let hist = crate::diskflow::iterate_history(&sys, &c, 4).unwrap();
        let l = jacobian_holder_constant(&sys, &hist, 1.0).unwrap();
        assert!(l > 0.0 && l < 1.0, "{l}");
    }
}
