use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{
    augmented_lagrangian, objective_value, stationarity_gap, theta, IterationTrace, StationarityGap,
    ThetaMemory,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{validate_problem, ConstrainedProblem, ValidationReport};
use crate::zo_grad::{
    component_estimates, estimate_full_gradient, estimate_minibatch_gradient, saga_combine,
    svrg_gradient, SagaTable, SvrgSnapshot,
};

use super::steps::{update_dual, update_x, y_sweep};
use super::{AdmmParams, OutputRule, SolverConfig, Variant};

/// Primal-dual point `(x, y₁..y_k, λ)` after `iter` iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateSnapshot {
    pub iter: usize,
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
}

impl IterateSnapshot {
    fn origin(problem: &ConstrainedProblem) -> Self {
        Self {
            iter: 0,
            x: vec![0.0; problem.dim()],
            y: problem.blocks.iter().map(|b| vec![0.0; b.dim()]).collect(),
            lambda: vec![0.0; problem.constraint_rows()],
        }
    }
}

/// Everything about one completed iteration, handed to observers.
pub struct StepRecord<'a> {
    pub epoch: usize,
    pub mu: f64,
    pub prev: &'a IterateSnapshot,
    pub next: &'a IterateSnapshot,
    /// The gradient estimate that drove the x-step.
    pub g_hat: &'a [f64],
    pub theta: f64,
    pub params: &'a AdmmParams,
}

#[derive(Clone, Debug)]
pub struct SolverOutput {
    /// The iterate chosen by the output rule.
    pub solution: IterateSnapshot,
    pub last: IterateSnapshot,
    /// Stationarity gap of `solution` (absent when no iteration ran).
    pub solution_gap: Option<StationarityGap>,
    pub trace: Vec<IterationTrace>,
    pub params: AdmmParams,
    pub report: ValidationReport,
    pub evals: u64,
    pub diag_evals: u64,
}

pub fn run(problem: &ConstrainedProblem, config: &SolverConfig) -> Result<SolverOutput> {
    run_with_observer(problem, config, |_| {})
}

enum Memory {
    None,
    Svrg(Option<SvrgSnapshot>),
    Saga { table: SagaTable, mean_prev: f64 },
}

struct Selected {
    theta: f64,
    prev: IterateSnapshot,
    next: IterateSnapshot,
    mu: f64,
}

/// Runs the configured variant, calling `observer` after every iteration.
pub fn run_with_observer<F>(
    problem: &ConstrainedProblem,
    config: &SolverConfig,
    mut observer: F,
) -> Result<SolverOutput>
where
    F: FnMut(&StepRecord<'_>),
{
    let report = validate_problem(problem)?;
    let oracle = &problem.objective;
    let n = oracle.num_components();
    let d = problem.dim();
    config.validate(n)?;
    let params = AdmmParams::resolve(config, &report)?;

    let start = Instant::now();
    let base_evals = oracle.eval_count();
    let mut diag_evals = 0u64;
    let main_evals = |diag: u64| oracle.eval_count() - base_evals - diag;

    let total = config.iterations;
    let mut current = IterateSnapshot::origin(problem);
    if total == 0 {
        return Ok(SolverOutput {
            solution: current.clone(),
            last: current,
            solution_gap: None,
            trace: Vec::new(),
            params,
            report,
            evals: 0,
            diag_evals: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut selector = ChaCha8Rng::seed_from_u64(config.seed);
    selector.set_stream(1);
    let random_target = match config.output_rule {
        OutputRule::UniformRandom => Some(selector.random_range(1..=total)),
        _ => None,
    };

    let mut memory = match config.variant {
        Variant::ZoSvrgAdmm => Memory::Svrg(None),
        Variant::ZoSagaAdmm => Memory::Saga {
            table: SagaTable::init(oracle, &current.x, config.smoothing.value(1, d))?,
            mean_prev: 0.0,
        },
        _ => Memory::None,
    };

    let b = config.batch_size;
    let d_over_b = d as f64 / b as f64;
    let stride = config.gap_stride();
    let mut x_prev = current.x.clone();
    let mut last_pair: Option<(IterateSnapshot, f64)> = None;
    let mut selected: Option<Selected> = None;
    let mut trace = Vec::with_capacity(total.min(1 << 16));
    let mut epoch = 1;

    for t in 0..total {
        if let Some(budget) = config.eval_budget {
            if main_evals(diag_evals) >= budget {
                break;
            }
        }
        let mu = config.smoothing.value(t + 1, d);
        let batch: Vec<usize> = if config.variant.is_stochastic() {
            (0..b).map(|_| rng.random_range(0..n)).collect()
        } else {
            Vec::new()
        };

        let mut saga_fresh = None;
        let g_hat = match &mut memory {
            Memory::None if config.variant == Variant::ZoAdmm => {
                estimate_full_gradient(oracle, &current.x, mu)?
            }
            Memory::None => estimate_minibatch_gradient(oracle, &batch, &current.x, mu)?,
            Memory::Svrg(snapshot) => {
                if t % config.epoch_length == 0 {
                    if t > 0 {
                        epoch += 1;
                    }
                    *snapshot = Some(SvrgSnapshot::take(oracle, &current.x, mu)?);
                }
                let snap = snapshot.as_ref().expect("snapshot taken at epoch start");
                svrg_gradient(oracle, &batch, &current.x, snap, mu)?
            }
            Memory::Saga { table, .. } => {
                let fresh = component_estimates(oracle, &batch, &current.x, mu)?;
                let g = saga_combine(&batch, &fresh, table);
                saga_fresh = Some(fresh);
                g
            }
        };

        let y_new = y_sweep(problem, &params, &current.x, &current.y, &current.lambda);
        let x_new = update_x(problem, &params, &current.x, &y_new, &current.lambda, &g_hat);
        let (lambda_new, residual) = update_dual(problem, params.rho, &x_new, &y_new, &current.lambda);

        let theta_memory = match &mut memory {
            Memory::None => ThetaMemory::None,
            Memory::Svrg(snapshot) => {
                let x_tilde = &snapshot.as_ref().expect("snapshot").x_tilde;
                ThetaMemory::Svrg {
                    d_over_b,
                    dist_now: linalg::dist_sq(&current.x, x_tilde),
                    dist_prev: linalg::dist_sq(&x_prev, x_tilde),
                }
            }
            Memory::Saga { table, mean_prev } => {
                let mean_now = table.tracked_mean_sq_distance();
                let m = ThetaMemory::Saga {
                    d_over_b,
                    mean_now,
                    mean_prev: *mean_prev,
                };
                let fresh = saga_fresh.take().expect("batch estimates");
                table.refresh_with(&batch, &current.x, mu, &fresh);
                table.move_anchor(&x_new);
                *mean_prev = mean_now;
                m
            }
        };
        let theta_t = theta(&x_new, &current.x, &x_prev, &current.y, &y_new, theta_memory);

        let next = IterateSnapshot {
            iter: t + 1,
            x: x_new,
            y: y_new,
            lambda: lambda_new,
        };

        let before = oracle.eval_count();
        let objective = objective_value(problem, &next.x, &next.y)?;
        let lagrangian = augmented_lagrangian(objective, &residual, &next.lambda, params.rho);
        let lambda_norm = linalg::norm(&next.lambda);
        for (quantity, value) in [("objective", objective.abs()), ("dual norm", lambda_norm)] {
            if !(value <= config.divergence_limit) {
                return Err(Error::Diverged {
                    iter: t + 1,
                    quantity,
                    value,
                });
            }
        }
        let sampled = (t + 1) % stride == 0 || t + 1 == total;
        let gap = if sampled {
            let g_full = estimate_full_gradient(oracle, &next.x, mu)?;
            Some(stationarity_gap(problem, &params, &current, &next, &g_full)?.total)
        } else {
            None
        };
        diag_evals += oracle.eval_count() - before;

        observer(&StepRecord {
            epoch,
            mu,
            prev: &current,
            next: &next,
            g_hat: &g_hat,
            theta: theta_t,
            params: &params,
        });

        trace.push(IterationTrace {
            iter: t + 1,
            epoch,
            evals: main_evals(diag_evals),
            diag_evals,
            wall_seconds: start.elapsed().as_secs_f64(),
            objective,
            lagrangian,
            primal_residual: linalg::norm(&residual),
            stationarity_gap: gap,
            theta: theta_t,
        });

        let keep = match config.output_rule {
            OutputRule::ArgminTheta => selected.as_ref().is_none_or(|s| theta_t < s.theta),
            OutputRule::UniformRandom => random_target == Some(t + 1),
            OutputRule::Last => false,
        };
        if keep {
            selected = Some(Selected {
                theta: theta_t,
                prev: current.clone(),
                next: next.clone(),
                mu,
            });
        }

        let old = std::mem::replace(&mut current, next);
        x_prev.clone_from(&old.x);
        last_pair = Some((old, mu));
    }

    // A budget stop can cut the run short of a random target; fall back to
    // the last completed step then.
    let chosen = match selected {
        Some(s) => Some((s.prev, s.next, s.mu)),
        None => last_pair.map(|(prev, mu)| (prev, current.clone(), mu)),
    };
    let (solution, solution_gap) = match chosen {
        Some((prev, next, mu)) => {
            let before = oracle.eval_count();
            let g_full = estimate_full_gradient(oracle, &next.x, mu)?;
            let gap = stationarity_gap(problem, &params, &prev, &next, &g_full)?;
            diag_evals += oracle.eval_count() - before;
            (next, Some(gap))
        }
        None => (current.clone(), None),
    };

    Ok(SolverOutput {
        solution,
        last: current,
        solution_gap,
        trace,
        params,
        report,
        evals: main_evals(diag_evals),
        diag_evals,
    })
}
