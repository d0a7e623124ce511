mod common;

use common::{normal_vec, rng};
use proptest::prelude::*;
use zoadmm::benchmarks::{correntropy_oracle, least_squares_oracle, synth_dataset};
use zoadmm::linalg::{self, SparseMatrix};
use zoadmm::problem::BlackBoxObjective;
use zoadmm::zo_grad::estimate_component_gradient;

/// Rounding allowance on top of the smoothing error: a few ulps of `f`
/// divided by `μ`.
fn slack(oracle: &BlackBoxObjective, i: usize, x: &[f64], mu: f64) -> f64 {
    16.0 * f64::EPSILON * (1.0 + oracle.eval(i, x).abs()) / mu
}

fn check(oracle: &BlackBoxObjective, lipschitz: f64, x: &[f64], mu: f64) -> Result<(), TestCaseError> {
    let d = x.len();
    for i in 0..oracle.num_components() {
        let est = estimate_component_gradient(oracle, i, x, mu).unwrap();
        let exact = oracle.analytic_gradient(i, x).unwrap();
        let bound = lipschitz * mu / 2.0 + slack(oracle, i, x, mu);
        let diff = linalg::sub(&est, &exact);
        for (j, e) in diff.iter().enumerate() {
            prop_assert!(e.abs() <= bound, "component {i} coordinate {j}: {e} > {bound}");
        }
        prop_assert!(linalg::norm(&diff) <= (d as f64).sqrt() * bound);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn correntropy_estimates_respect_the_smoothing_bound(
        seed in any::<u64>(),
        scale in 0.1f64..3.0,
        log_mu in -4.0f64..-1.0,
    ) {
        let (ds, _) = synth_dataset(8, 6, 0.5, 0.2, seed % 16).unwrap();
        let (oracle, l) = correntropy_oracle(&ds, 1.0).unwrap();
        let mut x = normal_vec(&mut rng(seed), 6);
        x.iter_mut().for_each(|v| *v *= scale);
        check(&oracle, l, &x, 10f64.powf(log_mu))?;
    }

    #[test]
    fn least_squares_estimates_are_nearly_exact(seed in any::<u64>(), log_mu in -4.0f64..-1.0) {
        let mut r = rng(seed);
        let features = SparseMatrix::from_dense(5, 4, &normal_vec(&mut r, 20));
        let (oracle, l) = least_squares_oracle(features, normal_vec(&mut r, 5)).unwrap();
        let x = normal_vec(&mut r, 4);
        let mu = 10f64.powf(log_mu);
        check(&oracle, l, &x, mu)?;
        // Central differences are exact on quadratics up to rounding.
        for i in 0..5 {
            let est = estimate_component_gradient(&oracle, i, &x, mu).unwrap();
            let exact = oracle.analytic_gradient(i, &x).unwrap();
            prop_assert!(linalg::norm(&linalg::sub(&est, &exact)) <= 4.0 * slack(&oracle, i, &x, mu));
        }
    }
}

#[test]
fn shrinking_the_constant_breaks_the_bound() {
    let (ds, _) = synth_dataset(8, 6, 0.5, 0.2, 3).unwrap();
    let (oracle, l) = correntropy_oracle(&ds, 1.0).unwrap();
    let mu = 0.1;
    let mut worst: f64 = 0.0;
    for probe in 0..50 {
        let x = normal_vec(&mut rng(probe), 6);
        for i in 0..oracle.num_components() {
            let est = estimate_component_gradient(&oracle, i, &x, mu).unwrap();
            let exact = oracle.analytic_gradient(i, &x).unwrap();
            worst = worst.max(linalg::sub(&est, &exact).iter().fold(0.0, |m, e| m.max(e.abs())));
        }
    }
    assert!(worst <= l * mu / 2.0);
    assert!(worst > (l / 1000.0) * mu / 2.0, "{worst}");
}
