//! Stationarity measurement, the θ displacement aggregate used for output
//! selection, and per-iteration traces.

use std::io::{self, Write};

use crate::admm::{AdmmParams, IterateSnapshot};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::ConstrainedProblem;

/// Squared residuals of the optimality system of the Lagrangian, evaluated
/// at `next` using the step that produced it from `prev`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationarityGap {
    /// `‖Aᵀλ⁺ − ∇̂f(x⁺)‖²`
    pub x_residual: f64,
    /// `‖ρBⱼᵀA(x⁺−x) + ρBⱼᵀΣ_{i>j}Bᵢ(yᵢ⁺−yᵢ) − Hⱼ(yⱼ⁺−yⱼ)‖²` per block.
    pub y_residuals: Vec<f64>,
    /// `‖Ax⁺ + ΣBⱼyⱼ⁺ − c‖²`
    pub lambda_residual: f64,
    pub total: f64,
}

/// `g_full` must be a full zeroth-order gradient at `next.x`.
pub fn stationarity_gap(
    problem: &ConstrainedProblem,
    params: &AdmmParams,
    prev: &IterateSnapshot,
    next: &IterateSnapshot,
    g_full: &[f64],
) -> Result<StationarityGap> {
    if next.iter != prev.iter + 1 {
        return Err(Error::MismatchedStates {
            first: prev.iter,
            second: next.iter,
        });
    }
    let rho = params.rho;

    let mut x_res = problem.a.matvec_t(&next.lambda);
    linalg::axpy(-1.0, g_full, &mut x_res);
    let x_residual = linalg::norm_sq(&x_res);

    // ρA(x⁺ − x) + ρ Σ_{i>j} Bᵢ(yᵢ⁺ − yᵢ), accumulated from the last block back.
    let dx = linalg::sub(&next.x, &prev.x);
    let a_dx = problem.a.matvec(&dx);
    let k = problem.blocks.len();
    let mut tail = vec![0.0; problem.constraint_rows()];
    let mut y_residuals = vec![0.0; k];
    for j in (0..k).rev() {
        let b = &problem.blocks[j].matrix;
        let mut coupled = a_dx.clone();
        linalg::axpy(1.0, &tail, &mut coupled);
        let mut res = b.matvec_t(&coupled);
        res.iter_mut().for_each(|v| *v *= rho);
        let dy = linalg::sub(&next.y[j], &prev.y[j]);
        linalg::axpy(-1.0, &params.apply_h(problem, j, &dy), &mut res);
        y_residuals[j] = linalg::norm_sq(&res);
        b.matvec_add(1.0, &dy, &mut tail);
    }

    let lambda_residual = linalg::norm_sq(&problem.residual(&next.x, &next.y));
    let total = x_residual + y_residuals.iter().sum::<f64>() + lambda_residual;
    Ok(StationarityGap {
        x_residual,
        y_residuals,
        lambda_residual,
        total,
    })
}

/// Variance-reduction displacement terms entering θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaMemory {
    None,
    /// `(d/b)(‖xₜ − x̃‖² + ‖xₜ₋₁ − x̃‖²)`
    Svrg { d_over_b: f64, dist_now: f64, dist_prev: f64 },
    /// `(d/(bn)) Σᵢ (‖xₜ − zᵢᵗ‖² + ‖xₜ₋₁ − zᵢᵗ⁻¹‖²)`, given as the two means.
    Saga { d_over_b: f64, mean_now: f64, mean_prev: f64 },
}

/// Realized `θₜ = ‖xₜ₊₁−xₜ‖² + ‖xₜ−xₜ₋₁‖² + (variance terms) + Σⱼ‖yⱼᵗ−yⱼᵗ⁺¹‖²`.
pub fn theta(
    x_next: &[f64],
    x: &[f64],
    x_prev: &[f64],
    y: &[Vec<f64>],
    y_next: &[Vec<f64>],
    memory: ThetaMemory,
) -> f64 {
    let moves = linalg::dist_sq(x_next, x) + linalg::dist_sq(x, x_prev);
    let blocks: f64 = y.iter().zip(y_next).map(|(a, b)| linalg::dist_sq(a, b)).sum();
    let variance = match memory {
        ThetaMemory::None => 0.0,
        ThetaMemory::Svrg {
            d_over_b,
            dist_now,
            dist_prev,
        } => d_over_b * (dist_now + dist_prev),
        ThetaMemory::Saga {
            d_over_b,
            mean_now,
            mean_prev,
        } => d_over_b * (mean_now + mean_prev),
    };
    moves + variance + blocks
}

/// `F(x, y) = f(x) + Σⱼ ψⱼ(yⱼ)`; costs `n` evaluations.
pub fn objective_value(problem: &ConstrainedProblem, x: &[f64], y: &[Vec<f64>]) -> Result<f64> {
    let value = problem.objective.mean_value(x)? + problem.penalty_value(y);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteValue {
            component: usize::MAX,
            value,
        })
    }
}

/// `F − ⟨λ, r⟩ + (ρ/2)‖r‖²` from an already evaluated objective and residual.
pub fn augmented_lagrangian(objective: f64, residual: &[f64], lambda: &[f64], rho: f64) -> f64 {
    objective - linalg::dot(lambda, residual) + 0.5 * rho * linalg::norm_sq(residual)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    /// 1-based iteration index of the state this row describes.
    pub iter: usize,
    pub epoch: usize,
    /// Main-loop oracle evaluations so far.
    pub evals: u64,
    /// Evaluations spent on diagnostics so far.
    pub diag_evals: u64,
    pub wall_seconds: f64,
    pub objective: f64,
    pub lagrangian: f64,
    pub primal_residual: f64,
    /// Present only on sampled iterations.
    pub stationarity_gap: Option<f64>,
    pub theta: f64,
}

pub const TRACE_HEADER: &str =
    "iter,epoch,evals,diag_evals,wall_s,objective,lagrangian,primal_res,stat_gap,theta";

impl IterationTrace {
    pub fn write_csv_row<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let gap = self.stationarity_gap.map(|g| g.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{:.6},{},{},{},{},{}",
            self.iter,
            self.epoch,
            self.evals,
            self.diag_evals,
            self.wall_seconds,
            self.objective,
            self.lagrangian,
            self.primal_residual,
            gap,
            self.theta
        )
    }
}

pub fn write_trace_csv<W: Write>(rows: &[IterationTrace], out: &mut W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for row in rows {
        row.write_csv_row(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::problem::{BlackBoxObjective, ComponentFunction, L1Norm, Penalty, PenaltyBlock, ZeroPenalty};

    struct SquaredNorm(usize);

    impl ComponentFunction for SquaredNorm {
        fn num_components(&self) -> usize {
            1
        }
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _i: usize, x: &[f64]) -> f64 {
            linalg::norm_sq(x)
        }
    }

    struct Zero(usize);

    impl ComponentFunction for Zero {
        fn num_components(&self) -> usize {
            1
        }
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _i: usize, _x: &[f64]) -> f64 {
            0.0
        }
    }

    fn params(h: Vec<f64>) -> AdmmParams {
        AdmmParams {
            eta: 0.5,
            rho: 1.0,
            r: 2.0,
            h,
            sigma_g_min: 1.5,
            sigma_g_max: 1.5,
            kappa_g: 1.0,
        }
    }

    fn snapshot(iter: usize, x: Vec<f64>, y: Vec<Vec<f64>>, lambda: Vec<f64>) -> IterateSnapshot {
        IterateSnapshot { iter, x, y, lambda }
    }

    #[test]
    fn stationary_point_has_zero_gap() {
        // min ‖x‖² s.t. x − y = 0: x = y = 0, λ = 0.
        let problem = ConstrainedProblem::new(
            BlackBoxObjective::new(SquaredNorm(2)),
            SparseMatrix::identity(2),
            vec![PenaltyBlock::new(SparseMatrix::scaled_identity(2, -1.0), ZeroPenalty)],
            vec![0.0; 2],
            2.0,
        );
        let s = snapshot(3, vec![0.0; 2], vec![vec![0.0; 2]], vec![0.0; 2]);
        let mut next = s.clone();
        next.iter = 4;
        let gap = stationarity_gap(&problem, &params(vec![1.02]), &s, &next, &[0.0, 0.0]).unwrap();
        assert!(gap.total <= 1e-12);
        assert!(matches!(
            stationarity_gap(&problem, &params(vec![1.02]), &s, &s, &[0.0, 0.0]),
            Err(Error::MismatchedStates { .. })
        ));
    }

    #[test]
    fn lambda_residual_is_squared_norm() {
        let problem = ConstrainedProblem::new(
            BlackBoxObjective::new(Zero(2)),
            SparseMatrix::identity(2),
            vec![PenaltyBlock::new(SparseMatrix::scaled_identity(2, -1.0), ZeroPenalty)],
            vec![0.0; 2],
            1.0,
        );
        let prev = snapshot(0, vec![0.3, -0.4], vec![vec![0.0; 2]], vec![0.0; 2]);
        let next = snapshot(1, vec![0.3, -0.4], vec![vec![0.0; 2]], vec![0.0; 2]);
        let gap = stationarity_gap(&problem, &params(vec![1.02]), &prev, &next, &[0.0; 2]).unwrap();
        assert!((gap.lambda_residual - 0.25).abs() < 1e-15);
        assert!(gap.x_residual >= 0.0 && gap.y_residuals.iter().all(|&v| v >= 0.0));
        assert_eq!(gap.total, gap.x_residual + gap.y_residuals[0] + gap.lambda_residual);
    }

    #[test]
    fn theta_examples() {
        let z = vec![0.0];
        let y = vec![vec![1.0, 2.0]];
        assert_eq!(theta(&z, &z, &z, &y, &y, ThetaMemory::None), 0.0);
        let svrg = ThetaMemory::Svrg {
            d_over_b: 1.0,
            dist_now: 0.0,
            dist_prev: 0.0,
        };
        assert_eq!(theta(&[1.0], &[0.0], &[0.0], &y, &y, svrg), 1.0);
        let saga = ThetaMemory::Saga {
            d_over_b: 2.0,
            mean_now: 0.5,
            mean_prev: 0.25,
        };
        assert_eq!(theta(&z, &z, &z, &y, &y, saga), 1.5);
    }

    #[test]
    fn objective_examples() {
        let problem = ConstrainedProblem::new(
            BlackBoxObjective::new(Zero(2)),
            SparseMatrix::identity(2),
            vec![PenaltyBlock::new(SparseMatrix::scaled_identity(2, -1.0), ZeroPenalty)],
            vec![0.0; 2],
            1.0,
        );
        assert_eq!(objective_value(&problem, &[0.0; 2], &[vec![0.0; 2]]).unwrap(), 0.0);

        let problem = ConstrainedProblem::new(
            BlackBoxObjective::new(SquaredNorm(2)),
            SparseMatrix::from_dense(1, 2, &[1.0, 1.0]),
            vec![PenaltyBlock::new(SparseMatrix::scaled_identity(1, -1.0), L1Norm { weight: 1.0 })],
            vec![0.0],
            2.0,
        );
        assert_eq!(objective_value(&problem, &[1.0, 1.0], &[vec![1.0]]).unwrap(), 3.0);
        assert_eq!(L1Norm { weight: 1.0 }.value(&[-2.0, 0.5]), 2.5);
    }

    #[test]
    fn csv_row_layout() {
        let row = IterationTrace {
            iter: 3,
            epoch: 1,
            evals: 200,
            diag_evals: 10,
            wall_seconds: 0.5,
            objective: 1.25,
            lagrangian: 1.5,
            primal_residual: 0.1,
            stationarity_gap: None,
            theta: 0.01,
        };
        let mut buf = Vec::new();
        write_trace_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        assert_eq!(lines.next().unwrap(), "3,1,200,10,0.500000,1.25,1.5,0.1,,0.01");
    }
}
