#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use zoadmm::admm::{AdmmParams, SolverConfig, Variant};
use zoadmm::benchmarks::{build_lasso_problem, synth_regression};
use zoadmm::linalg::SparseMatrix;
use zoadmm::problem::{
    validate_problem, BlackBoxObjective, ComponentFunction, ConstrainedProblem, GroupL2Norm,
    L1Norm, PenaltyBlock, ZeroPenalty,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// `fᵢ(x) = (sᵢ/2)‖x − cᵢ‖²`
pub struct Quadratic {
    pub centers: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

impl ComponentFunction for Quadratic {
    fn num_components(&self) -> usize {
        self.centers.len()
    }
    fn dim(&self) -> usize {
        self.centers[0].len()
    }
    fn value(&self, i: usize, x: &[f64]) -> f64 {
        let s: f64 = x.iter().zip(&self.centers[i]).map(|(a, b)| (a - b).powi(2)).sum();
        0.5 * self.scales[i] * s
    }
    fn gradient(&self, i: usize, x: &[f64]) -> Option<Vec<f64>> {
        Some(x.iter().zip(&self.centers[i]).map(|(a, b)| self.scales[i] * (a - b)).collect())
    }
}

pub fn quadratic_oracle(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (BlackBoxObjective, f64) {
    let centers = (0..n).map(|_| normal_vec(rng, d)).collect();
    let scales: Vec<f64> = uniform_vec(rng, n, 0.5, 2.0);
    let l = scales.iter().cloned().fold(0.0, f64::max);
    (BlackBoxObjective::new(Quadratic { centers, scales }), l)
}

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    L1,
    Group,
    Zero,
}

/// Dense random matrix; when `rows ≥ cols`, identity is added on top so
/// that the column rank is full.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, full_rank: bool) -> SparseMatrix {
    let mut data = uniform_vec(rng, rows * cols, -1.0, 1.0);
    if full_rank {
        for k in 0..cols.min(rows) {
            data[k * cols + k] += 2.0;
        }
    }
    SparseMatrix::from_dense(rows, cols, &data)
}

/// Small multi-block instance with `p ≥ d` constraint rows.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, d: usize, p: usize, blocks: &[(usize, Kind)]) -> ConstrainedProblem {
    let (oracle, l) = quadratic_oracle(rng, n, d);
    let a = random_matrix(rng, p, d, true);
    let blocks = blocks
        .iter()
        .map(|&(q, kind)| {
            let b = random_matrix(rng, p, q, false);
            let w = rng.random_range(0.05..0.5);
            match kind {
                Kind::L1 => PenaltyBlock::new(b, L1Norm { weight: w }),
                Kind::Group => PenaltyBlock::new(b, GroupL2Norm { weight: w }),
                Kind::Zero => PenaltyBlock::new(b, ZeroPenalty),
            }
        })
        .collect();
    let c = uniform_vec(rng, p, -1.0, 1.0);
    ConstrainedProblem::new(oracle, a, blocks, c, l)
}

pub fn params_for(problem: &ConstrainedProblem, eta: f64, rho: f64) -> AdmmParams {
    let report = validate_problem(problem).unwrap();
    AdmmParams::resolve(&SolverConfig::new(Variant::ZoAdmm, eta, rho), &report).unwrap()
}

/// Lasso surrogate: `½(aᵢᵀx − bᵢ)²` losses, `A = I`, one ℓ₁ block `B = −I`.
pub fn lasso_surrogate(seed: u64, n: usize, d: usize, tau: f64) -> ConstrainedProblem {
    let (features, targets, _) = synth_regression(n, d, 0.1, seed).unwrap();
    build_lasso_problem(features, targets, tau).unwrap()
}

pub fn trace_without_wall(rows: &[zoadmm::diagnostics::IterationTrace]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            let mut line = Vec::new();
            r.write_csv_row(&mut line).unwrap();
            let text = String::from_utf8(line).unwrap();
            let mut fields: Vec<&str> = text.trim_end().split(',').collect();
            fields.remove(4);
            fields.join(",")
        })
        .collect()
}
