use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::problem::{BlackBoxObjective, ComponentFunction};

use super::Dataset;

/// Correntropy bandwidth used when none is given.
pub const DEFAULT_SIGMA: f64 = 1.0;
/// Default weight of both ℓ₁ terms in the fused lasso benchmark.
pub const DEFAULT_TAU: f64 = 1e-5;

/// `fᵢ(x) = (σ²/2)(1 − exp(−(lᵢ − aᵢᵀx)²/σ²))`, a bounded nonconvex loss.
#[derive(Clone, Debug)]
pub struct CorrentropyLoss {
    features: SparseMatrix,
    labels: Vec<f64>,
    sigma: f64,
}

impl CorrentropyLoss {
    pub fn new(dataset: &Dataset, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("correntropy sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            features: dataset.features.clone(),
            labels: dataset.labels.clone(),
            sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `φ(r) = (σ²/2)(1 − e^{−r²/σ²})`
    pub fn profile(sigma: f64, r: f64) -> f64 {
        let s2 = sigma * sigma;
        0.5 * s2 * (1.0 - (-r * r / s2).exp())
    }

    /// `φ''(r) = e^{−r²/σ²}(1 − 2r²/σ²)`; its absolute value peaks at 1
    /// when `r = 0`.
    pub fn profile_curvature(sigma: f64, r: f64) -> f64 {
        let q = r * r / (sigma * sigma);
        (-q).exp() * (1.0 - 2.0 * q)
    }

    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        self.labels[i] - self.features.row_dot(i, x)
    }
}

impl ComponentFunction for CorrentropyLoss {
    fn num_components(&self) -> usize {
        self.labels.len()
    }

    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        Self::profile(self.sigma, self.residual(i, x))
    }

    fn gradient(&self, i: usize, x: &[f64]) -> Option<Vec<f64>> {
        let r = self.residual(i, x);
        let scale = -r * (-r * r / (self.sigma * self.sigma)).exp();
        let mut g = vec![0.0; self.dim()];
        let (cols, vals) = self.features.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            g[c] = scale * v;
        }
        Some(g)
    }
}

/// Black-box correntropy objective over `dataset` together with its gradient
/// Lipschitz constant `max|φ''| · maxᵢ‖aᵢ‖² = maxᵢ‖aᵢ‖²`.
pub fn correntropy_oracle(dataset: &Dataset, sigma: f64) -> Result<(BlackBoxObjective, f64)> {
    let loss = CorrentropyLoss::new(dataset, sigma)?;
    Ok((BlackBoxObjective::new(loss), dataset.max_row_norm_sq()))
}

/// `fᵢ(x) = ½(aᵢᵀx − bᵢ)²`, the convex surrogate used for reference checks.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    features: SparseMatrix,
    targets: Vec<f64>,
}

impl LeastSquares {
    pub fn new(features: SparseMatrix, targets: Vec<f64>) -> Result<Self> {
        if features.rows() != targets.len() || targets.is_empty() || features.cols() == 0 {
            return Err(Error::DimensionMismatch {
                block: None,
                detail: format!(
                    "{}×{} design with {} targets",
                    features.rows(),
                    features.cols(),
                    targets.len()
                ),
            });
        }
        Ok(Self { features, targets })
    }

    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        self.features.row_dot(i, x) - self.targets[i]
    }
}

impl ComponentFunction for LeastSquares {
    fn num_components(&self) -> usize {
        self.targets.len()
    }

    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        0.5 * self.residual(i, x).powi(2)
    }

    fn gradient(&self, i: usize, x: &[f64]) -> Option<Vec<f64>> {
        let r = self.residual(i, x);
        let mut g = vec![0.0; self.dim()];
        let (cols, vals) = self.features.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            g[c] = r * v;
        }
        Some(g)
    }
}

/// Least-squares oracle and its Lipschitz constant `maxᵢ‖aᵢ‖²`.
pub fn least_squares_oracle(features: SparseMatrix, targets: Vec<f64>) -> Result<(BlackBoxObjective, f64)> {
    let lipschitz = (0..features.rows())
        .map(|r| features.row_norm_sq(r))
        .fold(0.0, f64::max);
    let loss = LeastSquares::new(features, targets)?;
    Ok((BlackBoxObjective::new(loss), lipschitz))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let features = SparseMatrix::from_dense(2, 2, &[1.0, 2.0, -1.0, 0.5]);
        Dataset::new(features, vec![1.0, -1.0], "tiny").unwrap()
    }

    #[test]
    fn profile_values() {
        assert_eq!(CorrentropyLoss::profile(1.0, 0.0), 0.0);
        assert!((CorrentropyLoss::profile(1.0, 1.0) - 0.316_060_279_414_278_6).abs() < 1e-15);
        assert!((CorrentropyLoss::profile(2.0, 1e3) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn curvature_peak_is_one_at_zero() {
        // Dense scan of |φ''| over a wide residual range.
        for sigma in [0.3, 1.0, 4.0] {
            let peak = (-20000..=20000)
                .map(|k| CorrentropyLoss::profile_curvature(sigma, k as f64 * 1e-3 * sigma))
                .map(f64::abs)
                .fold(0.0, f64::max);
            assert!((peak - 1.0).abs() < 1e-12, "sigma {sigma}: {peak}");
        }
    }

    #[test]
    fn lipschitz_is_max_row_norm() {
        let (oracle, l) = correntropy_oracle(&tiny(), 1.0).unwrap();
        assert_eq!(l, 5.0);
        assert_eq!(oracle.num_components(), 2);
        assert!(correntropy_oracle(&tiny(), 0.0).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_difference() {
        let loss = CorrentropyLoss::new(&tiny(), 1.0).unwrap();
        let x = [0.3, -0.2];
        let g = loss.gradient(0, &x).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (loss.value(0, &xp) - loss.value(0, &xm)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn least_squares_values() {
        let a = SparseMatrix::from_dense(1, 2, &[1.0, 2.0]);
        let (oracle, l) = least_squares_oracle(a, vec![1.0]).unwrap();
        assert_eq!(l, 5.0);
        assert_eq!(oracle.eval(0, &[1.0, 1.0]), 2.0);
        assert_eq!(oracle.analytic_gradient(0, &[1.0, 1.0]), Some(vec![2.0, 4.0]));
    }
}
