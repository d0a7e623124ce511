//! Coordinate-smoothing gradient estimation and its mini-batch, SVRG and
//! SAGA compositions.
//!
//! Every estimate is assembled in a fixed order regardless of how many
//! worker threads evaluate the oracle, so runs are bit-reproducible.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::BlackBoxObjective;

/// Central differences along every coordinate:
/// `ĝⱼ = (fᵢ(x + μeⱼ) − fᵢ(x − μeⱼ)) / 2μ`. Costs `2d` evaluations.
pub fn estimate_component_gradient(
    oracle: &BlackBoxObjective,
    i: usize,
    x: &[f64],
    mu: f64,
) -> Result<Vec<f64>> {
    debug_assert!(mu > 0.0);
    debug_assert!(i < oracle.num_components());
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + mu;
        let plus = oracle.eval_finite(i, &probe)?;
        probe[j] = x[j] - mu;
        let minus = oracle.eval_finite(i, &probe)?;
        probe[j] = x[j];
        grad.push((plus - minus) / (2.0 * mu));
    }
    Ok(grad)
}

/// Per-component estimates for `indices`, returned in the same order.
pub fn component_estimates(
    oracle: &BlackBoxObjective,
    indices: &[usize],
    x: &[f64],
    mu: f64,
) -> Result<Vec<Vec<f64>>> {
    indices
        .par_iter()
        .with_min_len(4)
        .map(|&i| estimate_component_gradient(oracle, i, x, mu))
        .collect()
}

fn mean_of(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut acc = vec![0.0; d];
    for g in rows {
        linalg::axpy(1.0, g, &mut acc);
    }
    let scale = 1.0 / rows.len() as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    acc
}

/// Mean of the component estimates over a batch (a multiset, sampled with
/// replacement upstream). Costs `2d·|batch|` evaluations.
pub fn estimate_minibatch_gradient(
    oracle: &BlackBoxObjective,
    batch: &[usize],
    x: &[f64],
    mu: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let rows = component_estimates(oracle, batch, x, mu)?;
    Ok(mean_of(&rows, x.len()))
}

/// `∇̂f(x) = (1/n) Σᵢ ∇̂fᵢ(x)`. Costs `2dn` evaluations.
pub fn estimate_full_gradient(oracle: &BlackBoxObjective, x: &[f64], mu: f64) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..oracle.num_components()).collect();
    estimate_minibatch_gradient(oracle, &all, x, mu)
}

/// Epoch anchor for SVRG: `x̃` and the full estimate `∇̂f(x̃)` taken with
/// smoothing `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvrgSnapshot {
    pub x_tilde: Vec<f64>,
    pub g_tilde: Vec<f64>,
    pub mu: f64,
}

impl SvrgSnapshot {
    pub fn take(oracle: &BlackBoxObjective, x: &[f64], mu: f64) -> Result<Self> {
        Ok(Self {
            x_tilde: x.to_vec(),
            g_tilde: estimate_full_gradient(oracle, x, mu)?,
            mu,
        })
    }
}

/// `∇̂f_I(x) − ∇̂f_I(x̃) + ∇̂f(x̃)`.
///
/// The control-variate term at `x̃` is re-estimated with the snapshot's own
/// smoothing parameter, so the batch average is exactly `∇̂f(x)` at the
/// current `mu`. Costs `4d·|batch|` evaluations.
pub fn svrg_gradient(
    oracle: &BlackBoxObjective,
    batch: &[usize],
    x: &[f64],
    snapshot: &SvrgSnapshot,
    mu: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let current = estimate_minibatch_gradient(oracle, batch, x, mu)?;
    let anchor = estimate_minibatch_gradient(oracle, batch, &snapshot.x_tilde, snapshot.mu)?;
    Ok(current
        .iter()
        .zip(&anchor)
        .zip(&snapshot.g_tilde)
        .map(|((c, a), g)| c - a + g)
        .collect())
}

/// Per-component memory for SAGA: reference points `zᵢ`, cached estimates
/// `gᵢ = ∇̂fᵢ(zᵢ)` and their running mean `φ̂`.
#[derive(Clone, Debug)]
pub struct SagaTable {
    z: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
    mus: Vec<f64>,
    phi_hat: Vec<f64>,
    tracker: DistanceTracker,
}

/// Maintains `Σᵢ ‖a − zᵢ‖²` and `Σᵢ (a − zᵢ)` for a moving anchor `a`, so
/// the SAGA displacement term costs O(d) per anchor move and per refreshed
/// row instead of O(nd).
#[derive(Clone, Debug)]
struct DistanceTracker {
    anchor: Vec<f64>,
    sq_sum: f64,
    diff_sum: Vec<f64>,
}

impl SagaTable {
    /// `zᵢ = x0` for every `i`; costs `2dn` evaluations.
    pub fn init(oracle: &BlackBoxObjective, x0: &[f64], mu: f64) -> Result<Self> {
        let n = oracle.num_components();
        let all: Vec<usize> = (0..n).collect();
        let grads = component_estimates(oracle, &all, x0, mu)?;
        let phi_hat = mean_of(&grads, x0.len());
        Ok(Self {
            z: vec![x0.to_vec(); n],
            grads,
            mus: vec![mu; n],
            phi_hat,
            tracker: DistanceTracker {
                anchor: x0.to_vec(),
                sq_sum: 0.0,
                diff_sum: vec![0.0; x0.len()],
            },
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn phi_hat(&self) -> &[f64] {
        &self.phi_hat
    }

    pub fn reference_point(&self, i: usize) -> &[f64] {
        &self.z[i]
    }

    pub fn cached_gradient(&self, i: usize) -> &[f64] {
        &self.grads[i]
    }

    pub fn cached_mu(&self, i: usize) -> f64 {
        self.mus[i]
    }

    /// `φ̂` recomputed from the table, ignoring the incremental value.
    pub fn recomputed_phi_hat(&self) -> Vec<f64> {
        mean_of(&self.grads, self.phi_hat.len())
    }

    /// Largest absolute gap between the incremental and recomputed `φ̂`.
    pub fn phi_drift(&self) -> f64 {
        self.recomputed_phi_hat()
            .iter()
            .zip(&self.phi_hat)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(1/n) Σᵢ ‖x − zᵢ‖²`, computed directly.
    pub fn mean_sq_distance(&self, x: &[f64]) -> f64 {
        self.z.iter().map(|zi| linalg::dist_sq(x, zi)).sum::<f64>() / self.z.len() as f64
    }

    /// `(1/n) Σᵢ ‖a − zᵢ‖²` for the tracked anchor `a`, maintained
    /// incrementally.
    pub fn tracked_mean_sq_distance(&self) -> f64 {
        self.tracker.sq_sum.max(0.0) / self.z.len() as f64
    }

    pub fn anchor(&self) -> &[f64] {
        &self.tracker.anchor
    }

    /// Moves the tracked anchor to `x`.
    pub fn move_anchor(&mut self, x: &[f64]) {
        let n = self.z.len() as f64;
        let t = &mut self.tracker;
        let delta = linalg::sub(x, &t.anchor);
        t.sq_sum += 2.0 * linalg::dot(&delta, &t.diff_sum) + n * linalg::norm_sq(&delta);
        linalg::axpy(n, &delta, &mut t.diff_sum);
        t.anchor.copy_from_slice(x);
    }

    /// Applies a refresh with estimates already measured at `x_prev`. `grads`
    /// is aligned with `batch`; repeated indices refresh once.
    pub fn refresh_with(&mut self, batch: &[usize], x_prev: &[f64], mu: f64, grads: &[Vec<f64>]) {
        debug_assert_eq!(batch.len(), grads.len());
        let n = self.z.len() as f64;
        let mut seen = vec![false; self.z.len()];
        for (&i, g_new) in batch.iter().zip(grads) {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            for ((phi, old), new) in self.phi_hat.iter_mut().zip(&self.grads[i]).zip(g_new) {
                *phi -= (old - new) / n;
            }
            let t = &mut self.tracker;
            t.sq_sum += linalg::dist_sq(&t.anchor, x_prev) - linalg::dist_sq(&t.anchor, &self.z[i]);
            for ((s, old), new) in t.diff_sum.iter_mut().zip(&self.z[i]).zip(x_prev) {
                *s += old - new;
            }
            self.z[i].copy_from_slice(x_prev);
            self.grads[i].copy_from_slice(g_new);
            self.mus[i] = mu;
        }
    }

    pub(crate) fn distinct(batch: &[usize], n: usize) -> Vec<usize> {
        let mut seen = vec![false; n];
        batch
            .iter()
            .copied()
            .filter(|&i| !std::mem::replace(&mut seen[i], true))
            .collect()
    }
}

/// `(1/b) Σ_{i∈I} (∇̂fᵢ(x) − gᵢ) + φ̂`; the table is left untouched.
pub fn saga_gradient(
    oracle: &BlackBoxObjective,
    batch: &[usize],
    x: &[f64],
    table: &SagaTable,
    mu: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let fresh = component_estimates(oracle, batch, x, mu)?;
    Ok(saga_combine(batch, &fresh, table))
}

pub(crate) fn saga_combine(batch: &[usize], fresh: &[Vec<f64>], table: &SagaTable) -> Vec<f64> {
    let d = table.phi_hat.len();
    let mut acc = vec![0.0; d];
    for (&i, g) in batch.iter().zip(fresh) {
        for ((a, gi), old) in acc.iter_mut().zip(g).zip(&table.grads[i]) {
            *a += gi - old;
        }
    }
    let scale = 1.0 / batch.len() as f64;
    acc.iter()
        .zip(&table.phi_hat)
        .map(|(a, phi)| a * scale + phi)
        .collect()
}

/// For each distinct `i` in the batch: `zᵢ ← x_prev`, `gᵢ ← ∇̂fᵢ(x_prev)`,
/// with `φ̂` adjusted incrementally. Costs `2d` evaluations per distinct
/// index.
pub fn saga_update(
    oracle: &BlackBoxObjective,
    table: &mut SagaTable,
    batch: &[usize],
    x_prev: &[f64],
    mu: f64,
) -> Result<()> {
    let distinct = SagaTable::distinct(batch, table.len());
    let grads = component_estimates(oracle, &distinct, x_prev, mu)?;
    table.refresh_with(&distinct, x_prev, mu, &grads);
    Ok(())
}
