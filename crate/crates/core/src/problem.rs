//! Problem model: a finite-sum black-box loss, nonsmooth penalty blocks with
//! closed-form proximal maps, and the linear coupling constraint
//! `A x + Σⱼ Bⱼ yⱼ = c`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::SVD;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, SparseMatrix};

/// A family of `n` smooth component functions over `R^d`, evaluated by value.
///
/// Implementations must be deterministic: repeated calls with the same
/// `(i, x)` return bit-identical results.
pub trait ComponentFunction: Send + Sync {
    fn num_components(&self) -> usize;

    fn dim(&self) -> usize;

    fn value(&self, i: usize, x: &[f64]) -> f64;

    /// Analytic gradient, when the builder knows one. The solvers never call
    /// this; it exists for estimator checks.
    fn gradient(&self, _i: usize, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Value-only access to `f(x) = (1/n) Σᵢ fᵢ(x)` with evaluation accounting.
pub struct BlackBoxObjective {
    func: Arc<dyn ComponentFunction>,
    evals: AtomicU64,
}

impl BlackBoxObjective {
    pub fn new<F: ComponentFunction + 'static>(func: F) -> Self {
        Self::from_arc(Arc::new(func))
    }

    pub fn from_arc(func: Arc<dyn ComponentFunction>) -> Self {
        Self {
            func,
            evals: AtomicU64::new(0),
        }
    }

    /// Same component functions, counter reset to zero.
    pub fn fresh(&self) -> Self {
        Self::from_arc(Arc::clone(&self.func))
    }

    pub fn num_components(&self) -> usize {
        self.func.num_components()
    }

    pub fn dim(&self) -> usize {
        self.func.dim()
    }

    /// One component evaluation; bumps the counter by exactly one.
    pub fn eval(&self, i: usize, x: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.func.value(i, x)
    }

    pub(crate) fn eval_finite(&self, i: usize, x: &[f64]) -> Result<f64> {
        let v = self.eval(i, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteValue {
                component: i,
                value: v,
            })
        }
    }

    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// `f(x)`, costing `n` evaluations.
    pub fn mean_value(&self, x: &[f64]) -> Result<f64> {
        let n = self.num_components();
        let mut total = 0.0;
        for i in 0..n {
            total += self.eval_finite(i, x)?;
        }
        Ok(total / n as f64)
    }

    pub fn analytic_gradient(&self, i: usize, x: &[f64]) -> Option<Vec<f64>> {
        self.func.gradient(i, x)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        let x = vec![0.0; self.dim()];
        self.num_components() > 0 && self.func.gradient(0, &x).is_some()
    }
}

impl fmt::Debug for BlackBoxObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxObjective")
            .field("n", &self.num_components())
            .field("dim", &self.dim())
            .field("evals", &self.eval_count())
            .finish()
    }
}

/// Convex, lower-bounded penalty with a closed-form proximal map.
pub trait Penalty: Send + Sync + fmt::Debug {
    fn value(&self, y: &[f64]) -> f64;

    /// `argmin_y ψ(y) + ‖y − v‖² / (2 step)`
    fn prox(&self, v: &[f64], step: f64) -> Vec<f64>;
}

/// Soft thresholding: `sign(vᵢ) max(|vᵢ| − τ, 0)`.
pub fn prox_l1(v: &[f64], tau: f64) -> Vec<f64> {
    v.iter()
        .map(|&vi| vi.signum() * (vi.abs() - tau).max(0.0))
        .map(|vi| if vi == 0.0 { 0.0 } else { vi })
        .collect()
}

/// Block shrinkage: `v max(1 − τ/‖v‖₂, 0)`.
pub fn prox_group_l2(v: &[f64], tau: f64) -> Vec<f64> {
    let nv = linalg::norm(v);
    if nv <= tau {
        return vec![0.0; v.len()];
    }
    let scale = 1.0 - tau / nv;
    v.iter().map(|vi| vi * scale).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPenalty;

impl Penalty for ZeroPenalty {
    fn value(&self, _y: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, v: &[f64], _step: f64) -> Vec<f64> {
        v.to_vec()
    }
}

/// `weight · ‖y‖₁`
#[derive(Clone, Copy, Debug)]
pub struct L1Norm {
    pub weight: f64,
}

impl Penalty for L1Norm {
    fn value(&self, y: &[f64]) -> f64 {
        self.weight * linalg::norm_l1(y)
    }

    fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
        prox_l1(v, self.weight * step)
    }
}

/// `weight · ‖y‖₂` over the whole block.
#[derive(Clone, Copy, Debug)]
pub struct GroupL2Norm {
    pub weight: f64,
}

impl Penalty for GroupL2Norm {
    fn value(&self, y: &[f64]) -> f64 {
        self.weight * linalg::norm(y)
    }

    fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
        prox_group_l2(v, self.weight * step)
    }
}

/// One `ψⱼ(yⱼ)` term together with its constraint block `Bⱼ` (p × qⱼ).
#[derive(Clone, Debug)]
pub struct PenaltyBlock {
    pub matrix: SparseMatrix,
    pub penalty: Arc<dyn Penalty>,
}

impl PenaltyBlock {
    pub fn new<P: Penalty + 'static>(matrix: SparseMatrix, penalty: P) -> Self {
        Self {
            matrix,
            penalty: Arc::new(penalty),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

/// `min_x,y f(x) + Σⱼ ψⱼ(yⱼ)  s.t.  A x + Σⱼ Bⱼ yⱼ = c`
#[derive(Debug)]
pub struct ConstrainedProblem {
    pub objective: BlackBoxObjective,
    pub blocks: Vec<PenaltyBlock>,
    pub a: SparseMatrix,
    pub c: Vec<f64>,
    /// Gradient Lipschitz constant shared by every component.
    pub lipschitz: f64,
}

impl ConstrainedProblem {
    /// Assembles the parts; call [`validate_problem`] before solving.
    pub fn new(
        objective: BlackBoxObjective,
        a: SparseMatrix,
        blocks: Vec<PenaltyBlock>,
        c: Vec<f64>,
        lipschitz: f64,
    ) -> Self {
        Self {
            objective,
            blocks,
            a,
            c,
            lipschitz,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn constraint_rows(&self) -> usize {
        self.a.rows()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Copy sharing the component functions but with its own eval counter,
    /// so that concurrent runs account separately.
    pub fn with_fresh_counter(&self) -> Self {
        Self {
            objective: self.objective.fresh(),
            blocks: self.blocks.clone(),
            a: self.a.clone(),
            c: self.c.clone(),
            lipschitz: self.lipschitz,
        }
    }

    /// `A x + Σⱼ Bⱼ yⱼ − c`
    pub fn residual(&self, x: &[f64], y: &[Vec<f64>]) -> Vec<f64> {
        let mut r = self.a.matvec(x);
        for (block, yj) in self.blocks.iter().zip(y) {
            block.matrix.matvec_add(1.0, yj, &mut r);
        }
        linalg::axpy(-1.0, &self.c, &mut r);
        r
    }

    pub fn penalty_value(&self, y: &[Vec<f64>]) -> f64 {
        self.blocks
            .iter()
            .zip(y)
            .map(|(b, yj)| b.penalty.value(yj))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// Smallest eigenvalue of `AᵀA`.
    pub sigma_a_min: f64,
    /// Largest eigenvalue of `AᵀA`.
    pub sigma_a_max: f64,
    /// Largest eigenvalue of `BⱼᵀBⱼ`, per block.
    pub sigma_b_max: Vec<f64>,
    pub dim: usize,
    pub constraint_rows: usize,
    pub block_dims: Vec<usize>,
}

/// Relative singular-value floor below which `A` counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Checks dimensions and that `A` has full column rank.
pub fn validate_problem(problem: &ConstrainedProblem) -> Result<ValidationReport> {
    let d = problem.objective.dim();
    let p = problem.a.rows();
    if problem.a.cols() != d {
        return Err(Error::DimensionMismatch {
            block: None,
            detail: format!("A has {} columns but the oracle dimension is {d}", problem.a.cols()),
        });
    }
    if problem.c.len() != p {
        return Err(Error::DimensionMismatch {
            block: None,
            detail: format!("c has length {} but A has {p} rows", problem.c.len()),
        });
    }
    if problem.blocks.is_empty() {
        return Err(Error::DimensionMismatch {
            block: None,
            detail: "at least one penalty block is required".into(),
        });
    }
    for (j, block) in problem.blocks.iter().enumerate() {
        if block.matrix.rows() != p {
            return Err(Error::DimensionMismatch {
                block: Some(j),
                detail: format!("B has {} rows but A has {p}", block.matrix.rows()),
            });
        }
    }
    if !(problem.lipschitz > 0.0 && problem.lipschitz.is_finite()) {
        return Err(Error::InvalidLipschitz(problem.lipschitz));
    }
    if d > p {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }

    let svd = SVD::new(problem.a.to_dense(), false, false);
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let s_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
    if ratio < RANK_TOLERANCE {
        return Err(Error::RankDeficient { ratio });
    }
    let (sigma_a_min, sigma_a_max) = linalg::symmetric_extremes(problem.a.gram());

    Ok(ValidationReport {
        // The Gram eigenvalues lose relative accuracy near zero; the squared
        // singular value is the better estimate of the lower end.
        sigma_a_min: sigma_a_min.max(s_min * s_min),
        sigma_a_max,
        sigma_b_max: problem
            .blocks
            .iter()
            .map(|b| b.matrix.gram_spectral_max())
            .collect(),
        dim: d,
        constraint_rows: p,
        block_dims: problem.blocks.iter().map(PenaltyBlock::dim).collect(),
    })
}

/// Heuristic Lipschitz estimate: the largest absolute second difference
/// along random coordinate pairs `(eⱼ + eₖ)/√2` at random points, over random
/// components. Only a lower estimate of the true constant.
pub fn probe_lipschitz(objective: &BlackBoxObjective, probes: usize, step: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = objective.num_components();
    let d = objective.dim();
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; d];
    for _ in 0..probes {
        let i = rng.random_range(0..n);
        x.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let j = rng.random_range(0..d);
        let k = rng.random_range(0..d);
        let mut dir = vec![0.0; d];
        dir[j] += 1.0;
        dir[k] += 1.0;
        let nd = linalg::norm(&dir);
        dir.iter_mut().for_each(|v| *v /= nd);
        let mut plus = x.clone();
        linalg::axpy(step, &dir, &mut plus);
        let mut minus = x.clone();
        linalg::axpy(-step, &dir, &mut minus);
        let curvature = (objective.eval(i, &plus) - 2.0 * objective.eval(i, &x)
            + objective.eval(i, &minus))
            / (step * step);
        if curvature.is_finite() {
            best = best.max(curvature.abs());
        }
    }
    best
}

/// Per-coordinate smoothing parameter `μ` for the central-difference
/// estimator, uniform across coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothingSchedule {
    Fixed(f64),
    /// `μₜ = 1 / (d √t)`
    Decaying,
}

impl SmoothingSchedule {
    /// `t` is the 1-based iteration counter; `t = 0` is treated as `t = 1`.
    pub fn value(&self, t: usize, d: usize) -> f64 {
        match *self {
            SmoothingSchedule::Fixed(mu) => mu,
            SmoothingSchedule::Decaying => 1.0 / (d as f64 * (t.max(1) as f64).sqrt()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SmoothingSchedule::Fixed(mu) if !(mu > 0.0 && mu.is_finite()) => Err(
                Error::InvalidConfig(format!("fixed smoothing parameter must be positive, got {mu}")),
            ),
            _ => Ok(()),
        }
    }
}

impl Default for SmoothingSchedule {
    fn default() -> Self {
        SmoothingSchedule::Decaying
    }
}
