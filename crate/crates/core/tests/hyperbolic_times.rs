use hyplab::dynkernel::{ConstantSplitting, PowerSplitting, SplittingField, SystemSpec};
use hyplab::hyptimes::{contraction_series, nue_statistics, sigma_from_c, sigma_hyperbolic_times};
use hyplab::Point2;
use proptest::prelude::*;

fn count_grows_linearly(system: SystemSpec, field: &dyn SplittingField) {
    let x = Point2::new(0.1, 0.2);
    let series = contraction_series(&system, x, 10_000, field).unwrap();
    let c = nue_statistics(&series.values).unwrap().liminf_estimate;
    assert!(c > 0.0);
    let st = sigma_from_c(c, series.a_bound.max(c)).unwrap();
    let times = sigma_hyperbolic_times(&series.values, st.sigma).unwrap();
    for n in [1_000, 10_000] {
        let count = times.iter().take_while(|&&t| t <= n).count();
        assert!(
            count as f64 >= st.theta * n as f64 * 0.95,
            "{count} times in [1, {n}] against theta = {}",
            st.theta
        );
    }
}

#[test]
fn cat_has_linearly_many_times() {
    count_grows_linearly(SystemSpec::CatMap, &ConstantSplitting::cat());
}

#[test]
fn perturbed_cat_has_linearly_many_times() {
    let sys = SystemSpec::perturbed_cat(0.01).unwrap();
    count_grows_linearly(sys, &PowerSplitting::new(sys, 30));
}

#[test]
fn cat_times_satisfy_the_contraction_consequence() {
    let series = contraction_series(&SystemSpec::CatMap, Point2::new(0.3, 0.7), 500, &ConstantSplitting::cat()).unwrap();
    let sigma = 0.62;
    let times = sigma_hyperbolic_times(&series.values, sigma).unwrap();
    assert_eq!(times.len(), 500);
    for &n in &times {
        let mut log_prod = 0.0;
        for k in 1..=n {
            log_prod -= series.values[n - k];
            assert!(log_prod <= k as f64 * sigma.ln() + 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn appending_keeps_earlier_times(
        head in prop::collection::vec(-2.0f64..2.0, 1..80),
        tail in prop::collection::vec(-2.0f64..2.0, 0..80),
        sigma in 0.2f64..0.95,
    ) {
        let before = sigma_hyperbolic_times(&head, sigma).unwrap();
        let joined: Vec<f64> = head.iter().chain(&tail).copied().collect();
        let after = sigma_hyperbolic_times(&joined, sigma).unwrap();
        let prefix: Vec<usize> = after.into_iter().filter(|&t| t <= head.len()).collect();
        prop_assert_eq!(before, prefix);
    }
}
