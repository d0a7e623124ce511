mod common;

use common::{random_problem, rng, trace_without_wall, Kind};
use zoadmm::admm::{run, run_with_observer, OutputRule, SolverConfig, Variant};
use zoadmm::linalg::{self, SparseMatrix};
use zoadmm::problem::{BlackBoxObjective, ComponentFunction, ConstrainedProblem, L1Norm, PenaltyBlock};
use zoadmm::Error;

fn small_problem(seed: u64) -> ConstrainedProblem {
    random_problem(&mut rng(seed), 6, 4, 5, &[(3, Kind::L1), (2, Kind::Group)])
}

fn config(variant: Variant, iterations: usize) -> SolverConfig {
    let mut c = SolverConfig::new(variant, 0.3, 1.0);
    c.batch_size = 3;
    c.epoch_length = 2;
    c.iterations = iterations;
    c.seed = 11;
    c
}

#[test]
fn multiplier_identity_holds_along_a_run() {
    let problem = small_problem(1);
    let mut c = config(Variant::ZoSvrgAdmm, 300);
    c.gap_stride = Some(1000);
    let mut worst: f64 = 0.0;
    let out = run_with_observer(&problem, &c, |step| {
        let mut rhs = step.params.apply_g(&problem.a, &linalg::sub(&step.next.x, &step.prev.x));
        rhs.iter_mut().for_each(|v| *v /= step.params.eta);
        linalg::axpy(1.0, step.g_hat, &mut rhs);
        let lhs = problem.a.matvec_t(&step.next.lambda);
        let err = linalg::norm(&linalg::sub(&lhs, &rhs)) / (1.0 + linalg::norm(step.g_hat));
        worst = worst.max(err);
    })
    .unwrap();
    assert_eq!(out.trace.len(), 300);
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn evaluation_accounting_matches_estimator_costs() {
    let problem = small_problem(2);
    let (n, d, b, t) = (6u64, 4u64, 3u64, 5usize);
    let expected = [
        (Variant::ZoAdmm, 5 * 2 * d * n),
        (Variant::ZoSgdAdmm, 5 * 2 * d * b),
        (Variant::ZoSvrgAdmm, 3 * 2 * d * n + 5 * 4 * d * b),
        (Variant::ZoSagaAdmm, 2 * d * n + 5 * 2 * d * b),
    ];
    for (variant, evals) in expected {
        let p = problem.with_fresh_counter();
        let out = run(&p, &config(variant, t)).unwrap();
        assert_eq!(out.evals, evals, "{variant}");
        assert_eq!(out.evals + out.diag_evals, p.objective.eval_count(), "{variant}");
        assert_eq!(out.trace.last().unwrap().evals, evals);
        assert!(out.trace.windows(2).all(|w| w[0].evals <= w[1].evals && w[0].diag_evals <= w[1].diag_evals));
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let problem = small_problem(3);
    for variant in Variant::ALL {
        let c = config(variant, 40);
        let a = run(&problem.with_fresh_counter(), &c).unwrap();
        let b = run(&problem.with_fresh_counter(), &c).unwrap();
        assert_eq!(trace_without_wall(&a.trace), trace_without_wall(&b.trace), "{variant}");
        assert_eq!(a.solution, b.solution);
        if variant.is_stochastic() {
            let mut other = c.clone();
            other.seed += 1;
            let o = run(&problem.with_fresh_counter(), &other).unwrap();
            assert_ne!(o.last.x, a.last.x, "{variant}");
        }
    }
}

#[test]
fn budget_stops_the_loop() {
    let problem = small_problem(4);
    let mut c = config(Variant::ZoSgdAdmm, 1000);
    c.eval_budget = Some(100);
    let out = run(&problem, &c).unwrap();
    // 24 evaluations per iteration: the fifth step crosses 100.
    assert_eq!(out.trace.len(), 5);
    assert_eq!(out.evals, 120);
    assert!(out.solution_gap.is_some());
}

#[test]
fn zero_iterations_return_the_origin() {
    let problem = small_problem(5);
    let out = run(&problem, &config(Variant::ZoSagaAdmm, 0)).unwrap();
    assert!(out.trace.is_empty());
    assert_eq!(out.solution.iter, 0);
    assert!(out.solution.x.iter().all(|v| *v == 0.0));
    assert!(out.solution_gap.is_none());
    assert_eq!(out.evals + out.diag_evals, 0);
}

#[test]
fn output_rules_pick_the_documented_iterate() {
    let problem = small_problem(6);
    let mut c = config(Variant::ZoSvrgAdmm, 30);
    c.output_rule = OutputRule::Last;
    let last = run(&problem.with_fresh_counter(), &c).unwrap();
    assert_eq!(last.solution, last.last);

    c.output_rule = OutputRule::ArgminTheta;
    let out = run(&problem.with_fresh_counter(), &c).unwrap();
    let best = out
        .trace
        .iter()
        .min_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap())
        .unwrap();
    assert_eq!(out.solution.iter, best.iter);

    c.output_rule = OutputRule::UniformRandom;
    let a = run(&problem.with_fresh_counter(), &c).unwrap();
    let b = run(&problem.with_fresh_counter(), &c).unwrap();
    assert!((1..=30).contains(&a.solution.iter));
    assert_eq!(a.solution, b.solution);
}

#[test]
fn trace_rows_are_consistent() {
    let problem = small_problem(7);
    let mut c = config(Variant::ZoSagaAdmm, 50);
    c.gap_stride = Some(7);
    let mut residual_errors = Vec::new();
    let out = run_with_observer(&problem, &c, |step| {
        let moved = linalg::norm(&linalg::sub(&step.prev.lambda, &step.next.lambda)) / step.params.rho;
        let r = linalg::norm(&problem.residual(&step.next.x, &step.next.y));
        residual_errors.push((moved - r).abs() / (1e-300 + r.max(moved)));
    })
    .unwrap();
    assert!(residual_errors.iter().all(|e| *e <= 1e-12 || e.is_nan()));
    for row in &out.trace {
        let sampled = row.iter % 7 == 0 || row.iter == 50;
        assert_eq!(row.stationarity_gap.is_some(), sampled, "iter {}", row.iter);
        assert!(row.theta >= 0.0);
        assert!(row.stationarity_gap.unwrap_or(0.0) >= 0.0);
    }
}

struct Concave;

impl ComponentFunction for Concave {
    fn num_components(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, _i: usize, x: &[f64]) -> f64 {
        -100.0 * (linalg::norm_sq(x) + x[0])
    }
}

#[test]
fn divergence_is_reported() {
    let problem = ConstrainedProblem::new(
        BlackBoxObjective::new(Concave),
        SparseMatrix::identity(2),
        vec![PenaltyBlock::new(SparseMatrix::scaled_identity(2, -1.0), L1Norm { weight: 0.0 })],
        vec![0.0; 2],
        200.0,
    );
    let mut c = SolverConfig::new(Variant::ZoAdmm, 1.0, 1.0);
    c.iterations = 500;
    match run(&problem, &c) {
        Err(Error::Diverged { iter, .. }) => assert!(iter < 500),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let problem = small_problem(8);
    let mut c = config(Variant::ZoSgdAdmm, 5);
    c.batch_size = 7;
    assert!(matches!(run(&problem, &c), Err(Error::InvalidConfig(_))));
    let mut c = config(Variant::ZoSvrgAdmm, 5);
    c.epoch_length = 0;
    assert!(matches!(run(&problem, &c), Err(Error::InvalidConfig(_))));
    let mut c = config(Variant::ZoAdmm, 5);
    c.eta = -1.0;
    assert!(matches!(run(&problem, &c), Err(Error::InvalidConfig(_))));
    let mut c = config(Variant::ZoAdmm, 5);
    c.x_curvature = Some(0.5);
    assert!(matches!(run(&problem, &c), Err(Error::InvalidConfig(_))));
}
