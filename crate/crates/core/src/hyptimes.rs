//! Non-uniform expansion along `E^cu`, the Pliss selection and
//! sigma-hyperbolic times.
//!
//! Everything works on the contraction series
//! `a_j = -log |Df^{-1} | E^cu_{f^j(x)}|`, so positive values mean expansion.
//! A time `n` is sigma-hyperbolic iff every trailing window ending at `n`
//! satisfies `sum_{j=n-k+1}^{n} a_j >= k * (-log sigma)`; the Pliss times
//! are the same windows with threshold `c1`. Both reduce to "the partial sum
//! `S_n - c1 n` reaches a new running maximum", an O(N) scan.

use serde::{Deserialize, Serialize};

use crate::dynkernel::{cat_lambda_u, SplittingField, SystemSpec};
use crate::error::{invalid, Error, Result};
use crate::geom::Point2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSeries {
    pub base_point: Point2,
    /// `a_1, ..., a_N`.
    pub values: Vec<f64>,
    /// Upper bound on `|a_j|` over the system (analytic where available).
    pub a_bound: f64,
    /// Set when the orbit left the domain before `N` steps.
    pub truncated: bool,
}

impl ContractionSeries {
    /// Wraps raw values; `a_bound` defaults to `max |a_j|`.
    pub fn from_values(values: Vec<f64>, a_bound: Option<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("contraction series must be nonempty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("contraction series has non-finite values"));
        }
        let observed = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let a_bound = a_bound.unwrap_or(observed).max(observed);
        Ok(Self {
            base_point: Point2::default(),
            values,
            a_bound,
            truncated: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes `a_1..a_N` along the orbit of `x`.
///
/// The `E^cu` direction is taken from `field` at `x` and then transported by
/// `Df`, which is how the invariant bundle moves; with that choice
/// `|Df^{-1}(f^j x) e_cu(f^j x)| = 1 / |Df(f^{j-1} x) e_cu(f^{j-1} x)|`.
/// A horseshoe orbit that escapes truncates the series and sets the flag.
pub fn contraction_series(
    system: &SystemSpec,
    x: Point2,
    n: usize,
    field: &dyn SplittingField,
) -> Result<ContractionSeries> {
    if n == 0 {
        return Err(invalid("series length must be positive"));
    }
    let mut u = field.splitting_at(x)?.e_cu;
    let mut p = x;
    let mut values = Vec::with_capacity(n);
    let mut truncated = false;
    for _ in 0..n {
        let (df, next) = match (system.jacobian(p), system.forward(p)) {
            (Ok(df), Ok(next)) => (df, next),
            (Err(Error::DomainEscape(q)), _) | (_, Err(Error::DomainEscape(q))) => {
                if values.is_empty() {
                    return Err(Error::DomainEscape(q));
                }
                truncated = true;
                break;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let w = df.apply(u);
        let stretch = w.norm();
        values.push(stretch.ln());
        u = (1.0 / stretch) * w;
        p = next;
    }
    let observed = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let a_bound = match *system {
        SystemSpec::CatMap => cat_lambda_u().ln(),
        SystemSpec::PerturbedCat { epsilon: 0.0 } => cat_lambda_u().ln(),
        SystemSpec::AffineHorseshoe { mu, .. } => mu.ln(),
        SystemSpec::PerturbedCat { .. } => observed,
    }
    .max(observed);
    Ok(ContractionSeries {
        base_point: x,
        values,
        a_bound,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NueStatistics {
    /// Running Birkhoff averages `(1/n) sum_{j<=n} a_j`.
    pub averages: Vec<f64>,
    /// Infimum of the averages over the last half of the series; an
    /// approximation of the liminf that discards the transient.
    pub liminf_estimate: f64,
}

pub fn nue_statistics(values: &[f64]) -> Result<NueStatistics> {
    if values.is_empty() {
        return Err(invalid("empty series"));
    }
    let mut sum = 0.0;
    let averages: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, a)| {
            sum += a;
            sum / (i + 1) as f64
        })
        .collect();
    let tail_start = averages.len() / 2;
    let liminf_estimate = averages[tail_start..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(NueStatistics {
        averages,
        liminf_estimate,
    })
}

/// Constants `A >= c2 > c1 > 0` of the Pliss selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlissParams {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub theta: f64,
}

impl PlissParams {
    pub fn new(c1: f64, c2: f64, a: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > c1 && a >= c2 && a.is_finite()) {
            return Err(invalid(format!(
                "Pliss constants need A >= c2 > c1 > 0, got c1={c1}, c2={c2}, A={a}"
            )));
        }
        Ok(Self {
            c1,
            c2,
            a,
            theta: (c2 - c1) / (a - c1),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissSelection {
    /// `n_1 < ... < n_l`, 1-based.
    pub times: Vec<usize>,
    /// Some `a_j` exceeds `A`; the selection is still exact but the density
    /// guarantee no longer applies.
    pub hypothesis_violated: bool,
    /// `sum_{j<=N} a_j >= c2 N`.
    pub sum_condition: bool,
    /// `l > theta N`, asserted only when both hypotheses hold.
    pub guarantee: Option<bool>,
}

/// Indices `m` such that `S_m - c * m >= S_n - c * n` for all `0 <= n < m`,
/// with `S` the prefix sums. Equality counts.
fn record_times(values: &[f64], c: f64) -> Vec<usize> {
    let mut best = 0.0f64;
    let mut sum = 0.0f64;
    let mut out = Vec::new();
    for (i, a) in values.iter().enumerate() {
        let m = i + 1;
        sum += a;
        let t = sum - c * m as f64;
        if t >= best {
            out.push(m);
            best = t;
        }
    }
    out
}

/// Exactly the indices `n_i <= N` with
/// `sum_{j=n+1}^{n_i} a_j >= c1 (n_i - n)` for every `0 <= n < n_i`.
pub fn pliss_select(values: &[f64], params: &PlissParams) -> PlissSelection {
    let times = record_times(values, params.c1);
    let n = values.len();
    let hypothesis_violated = values.iter().any(|&a| a > params.a);
    let sum_condition = values.iter().sum::<f64>() >= params.c2 * n as f64;
    let guarantee = (!hypothesis_violated && sum_condition)
        .then_some(times.len() as f64 > params.theta * n as f64);
    PlissSelection {
        times,
        hypothesis_violated,
        sum_condition,
        guarantee,
    }
}

/// All `n` such that `prod_{j=n-k+1}^{n} |Df^{-1}|E^cu_{f^j x}| <= sigma^k`
/// for every `1 <= k <= n`.
pub fn sigma_hyperbolic_times(values: &[f64], sigma: f64) -> Result<Vec<usize>> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    Ok(record_times(values, -sigma.ln()))
}

pub fn is_sigma_hyperbolic_time(values: &[f64], n: usize, sigma: f64) -> Result<bool> {
    if n == 0 || n > values.len() {
        return Ok(false);
    }
    Ok(sigma_hyperbolic_times(&values[..n], sigma)?.last() == Some(&n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaTheta {
    pub sigma: f64,
    pub theta: f64,
}

/// `c1 = c/2`, `c2 = c`: returns `sigma = exp(-c/2)` and
/// `theta = (c - c/2) / (A - c/2)`.
pub fn sigma_from_c(c: f64, a: f64) -> Result<SigmaTheta> {
    if !(c > 0.0 && a >= c && a.is_finite()) {
        return Err(invalid(format!("need A >= c > 0, got c={c}, A={a}")));
    }
    let half = c / 2.0;
    Ok(SigmaTheta {
        sigma: (-half).exp(),
        theta: (c - half) / (a - half),
    })
}

/// JSON report of a hyperbolic-time scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct TimesReport {
    pub N: usize,
    pub c: f64,
    pub A: f64,
    pub sigma: f64,
    pub theta: f64,
    pub times: Vec<usize>,
    pub density: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynkernel::{ConstantSplitting, PowerSplitting};
    use proptest::prelude::*;

    /// O(N^2) window check straight from the definition.
    fn pliss_brute(values: &[f64], c1: f64) -> Vec<usize> {
        (1..=values.len())
            .filter(|&m| {
                (0..m).all(|n| values[n..m].iter().sum::<f64>() >= c1 * (m - n) as f64)
            })
            .collect()
    }

    #[test]
    fn cat_series_is_constant() {
        let s = contraction_series(
            &SystemSpec::CatMap,
            Point2::new(0.1, 0.2),
            5,
            &ConstantSplitting::cat(),
        )
        .unwrap();
        for v in &s.values {
            assert!((v - 0.962424).abs() < 1e-6);
            assert!((v - cat_lambda_u().ln()).abs() < 1e-14);
        }
        assert!(!s.truncated);
    }

    #[test]
    fn horseshoe_series_and_truncation() {
        let h = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        let s = contraction_series(&h, Point2::new(0.25, 0.6), 8, &ConstantSplitting::axes()).unwrap();
        assert_eq!(s.len(), 8);
        for v in &s.values {
            assert!((v - 3f64.ln()).abs() < 1e-15);
        }
        // 0.05 -> 0.15 -> 0.45, which lies between the bands
        let t = contraction_series(&h, Point2::new(0.05, 0.5), 8, &ConstantSplitting::axes()).unwrap();
        assert!(t.truncated);
        assert_eq!(t.len(), 2);
        assert!(contraction_series(&h, Point2::new(0.5, 0.5), 3, &ConstantSplitting::axes()).is_err());
    }

    #[test]
    fn perturbed_series_stays_near_cat_rate() {
        let s = SystemSpec::perturbed_cat(0.01).unwrap();
        let field = PowerSplitting::new(s, 30);
        let series = contraction_series(&s, Point2::new(0.37, 0.11), 400, &field).unwrap();
        let lu = cat_lambda_u().ln();
        assert!(series.values.iter().all(|v| (v - lu).abs() < 0.05));
        assert!(series.a_bound >= series.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn nue_examples() {
        let st = nue_statistics(&[0.7; 10]).unwrap();
        assert!(st.averages.iter().all(|a| (a - 0.7).abs() < 1e-15));
        assert!((st.liminf_estimate - 0.7).abs() < 1e-15);
        let alt: Vec<f64> = (0..1000).map(|j| if j % 2 == 0 { 2.0 } else { 0.0 }).collect();
        let st = nue_statistics(&alt).unwrap();
        assert_eq!(*st.averages.last().unwrap(), 1.0);
        assert!((st.liminf_estimate - 1.0).abs() < 1e-12);
        assert!(nue_statistics(&[]).is_err());
    }

    #[test]
    fn pliss_examples() {
        let p = PlissParams::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(p.theta, 0.5);
        let sel = pliss_select(&[3.0; 100], &p);
        assert_eq!(sel.times, (1..=100).collect::<Vec<_>>());
        assert_eq!(sel.guarantee, Some(true));
        let sel = pliss_select(&[2.0; 40], &p);
        assert_eq!(sel.times.len(), 40);
        // a_j > A flags the hypothesis but still selects
        let sel = pliss_select(&[5.0, 0.0, 0.0], &p);
        assert!(sel.hypothesis_violated);
        assert_eq!(sel.guarantee, None);
        assert_eq!(sel.times, pliss_brute(&[5.0, 0.0, 0.0], 1.0));
        assert!(PlissParams::new(2.0, 1.0, 3.0).is_err());
        assert!(PlissParams::new(1.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn equality_counts_as_a_time() {
        // windows ending at 2: (1) -> 1 >= 1, (0 + ... ) exact ties
        let values = [1.0, 1.0, 0.5, 1.5];
        let times = record_times(&values, 1.0);
        assert_eq!(times, vec![1, 2, 4]);
        assert_eq!(times, pliss_brute(&values, 1.0));
    }

    #[test]
    fn cat_hyperbolic_times() {
        let s = contraction_series(
            &SystemSpec::CatMap,
            Point2::new(0.3, 0.3),
            200,
            &ConstantSplitting::cat(),
        )
        .unwrap();
        assert_eq!(sigma_hyperbolic_times(&s.values, 0.5).unwrap().len(), 200);
        assert!(sigma_hyperbolic_times(&s.values, 0.3).unwrap().is_empty());
        assert!(sigma_hyperbolic_times(&s.values, 1.0).is_err());
    }

    #[test]
    fn sigma_from_c_examples() {
        let l2 = 2.0 * 2f64.ln();
        let st = sigma_from_c(l2, l2).unwrap();
        assert!((st.sigma - 0.5).abs() < 1e-15 && (st.theta - 1.0).abs() < 1e-15);
        let c = cat_lambda_u().ln();
        let st = sigma_from_c(c, c).unwrap();
        assert!((st.sigma - 0.6180).abs() < 1e-4);
        assert!((st.sigma - cat_lambda_u().sqrt().recip()).abs() < 1e-15);
        assert_eq!(st.theta, 1.0);
        let st = sigma_from_c(1e-12, 1.0).unwrap();
        assert!(1.0 - st.sigma < 1e-11);
        assert!(sigma_from_c(2.0, 1.0).is_err());
        assert!(sigma_from_c(0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn pliss_matches_brute_force(
            values in proptest::collection::vec(-3.0f64..3.0, 1..60),
            c1 in 0.05f64..2.0,
        ) {
            prop_assert_eq!(record_times(&values, c1), pliss_brute(&values, c1));
        }

        #[test]
        fn appending_never_removes_times(
            values in proptest::collection::vec(-2.0f64..2.0, 2..80),
            cut in 1usize..80,
            sigma in 0.2f64..0.95,
        ) {
            let cut = cut.min(values.len());
            let short = sigma_hyperbolic_times(&values[..cut], sigma).unwrap();
            let long = sigma_hyperbolic_times(&values, sigma).unwrap();
            let prefix: Vec<usize> = long.into_iter().filter(|&n| n <= cut).collect();
            prop_assert_eq!(short, prefix);
        }

        #[test]
        fn hyperbolic_times_bound_every_trailing_product(
            values in proptest::collection::vec(-2.0f64..2.0, 1..80),
            sigma in 0.2f64..0.95,
        ) {
            for n in sigma_hyperbolic_times(&values, sigma).unwrap() {
                let mut prod = 1.0;
                for k in 1..=n {
                    prod *= (-values[n - k]).exp();
                    prop_assert!(prod <= sigma.powi(k as i32) * (1.0 + 1e-12));
                }
            }
        }
    }
}
