use crate::linalg::{self, SparseMatrix};
use crate::problem::{ConstrainedProblem, Penalty};

use super::AdmmParams;

/// Closed-form minimizer of the `Hⱼ`-linearized y-subproblem:
/// `yⱼ⁺ = prox_{ψⱼ/hⱼ}(yⱼ − Bⱼᵀ(ρ vⱼ − λ) / hⱼ)`, where `vⱼ` is the current
/// constraint residual (blocks before `j` already updated).
pub(crate) fn y_block_step(
    b: &SparseMatrix,
    penalty: &dyn Penalty,
    y_j: &[f64],
    residual: &[f64],
    lambda: &[f64],
    rho: f64,
    h_j: f64,
) -> Vec<f64> {
    let weighted: Vec<f64> = residual
        .iter()
        .zip(lambda)
        .map(|(v, l)| rho * v - l)
        .collect();
    let mut point = y_j.to_vec();
    b.matvec_t_add(-1.0 / h_j, &weighted, &mut point);
    penalty.prox(&point, 1.0 / h_j)
}

/// New `yⱼ` given `x`, the block list `y` (entries before `j` already
/// refreshed this sweep) and `λ`.
pub fn update_y_block(
    problem: &ConstrainedProblem,
    params: &AdmmParams,
    x: &[f64],
    y: &[Vec<f64>],
    lambda: &[f64],
    j: usize,
) -> Vec<f64> {
    let residual = problem.residual(x, y);
    let block = &problem.blocks[j];
    y_block_step(
        &block.matrix,
        block.penalty.as_ref(),
        &y[j],
        &residual,
        lambda,
        params.rho,
        params.h[j],
    )
}

/// Full Gauss–Seidel sweep over the blocks; keeps the residual current in
/// O(nnz) per block.
pub(crate) fn y_sweep(
    problem: &ConstrainedProblem,
    params: &AdmmParams,
    x: &[f64],
    y: &[Vec<f64>],
    lambda: &[f64],
) -> Vec<Vec<f64>> {
    let mut residual = problem.residual(x, y);
    let mut out = Vec::with_capacity(y.len());
    for (j, block) in problem.blocks.iter().enumerate() {
        let next = y_block_step(
            &block.matrix,
            block.penalty.as_ref(),
            &y[j],
            &residual,
            lambda,
            params.rho,
            params.h[j],
        );
        let delta = linalg::sub(&next, &y[j]);
        block.matrix.matvec_add(1.0, &delta, &mut residual);
        out.push(next);
    }
    out
}

/// Minimizer of the linearized x-subproblem with `G = rI − ρηAᵀA`:
/// `x⁺ = x − (η/r)(ĝ − Aᵀλ + ρAᵀ(Ax + ΣBⱼyⱼ⁺ − c))`.
pub fn update_x(
    problem: &ConstrainedProblem,
    params: &AdmmParams,
    x: &[f64],
    y_new: &[Vec<f64>],
    lambda: &[f64],
    g_hat: &[f64],
) -> Vec<f64> {
    let residual = problem.residual(x, y_new);
    let weighted: Vec<f64> = residual
        .iter()
        .zip(lambda)
        .map(|(v, l)| params.rho * v - l)
        .collect();
    let mut direction = g_hat.to_vec();
    problem.a.matvec_t_add(1.0, &weighted, &mut direction);
    let step = params.eta / params.r;
    x.iter().zip(&direction).map(|(xi, di)| xi - step * di).collect()
}

/// `λ⁺ = λ − ρ(Ax⁺ + ΣBⱼyⱼ⁺ − c)`; also returns the primal residual.
pub fn update_dual(
    problem: &ConstrainedProblem,
    rho: f64,
    x_new: &[f64],
    y_new: &[Vec<f64>],
    lambda: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let residual = problem.residual(x_new, y_new);
    let next = lambda
        .iter()
        .zip(&residual)
        .map(|(l, r)| l - rho * r)
        .collect();
    (next, residual)
}
