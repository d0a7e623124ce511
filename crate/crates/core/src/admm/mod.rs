//! Linearized zeroth-order ADMM: a Gauss–Seidel sweep of proximal y-block
//! updates, a single gradient-like x-step, and dual ascent.

mod prescribe;
mod solver;
mod steps;

use std::fmt;
use std::str::FromStr;

pub use prescribe::{prescribe_hyperparameters, DimExponent, Prescription, PrescriptionInput};
pub use solver::{run, run_with_observer, IterateSnapshot, SolverOutput, StepRecord};
pub use steps::{update_dual, update_x, update_y_block};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::problem::{ConstrainedProblem, SmoothingSchedule, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Deterministic: full zeroth-order gradient every iteration.
    ZoAdmm,
    /// Plain mini-batch estimator, no variance reduction.
    ZoSgdAdmm,
    ZoSvrgAdmm,
    ZoSagaAdmm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ZoAdmm,
        Variant::ZoSgdAdmm,
        Variant::ZoSvrgAdmm,
        Variant::ZoSagaAdmm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::ZoAdmm => "zo-admm",
            Variant::ZoSgdAdmm => "zo-sgd-admm",
            Variant::ZoSvrgAdmm => "zo-svrg-admm",
            Variant::ZoSagaAdmm => "zo-saga-admm",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Variant::ZoAdmm)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zo-admm" | "admm" => Ok(Variant::ZoAdmm),
            "zo-sgd-admm" | "sgd" => Ok(Variant::ZoSgdAdmm),
            "zo-svrg-admm" | "svrg" => Ok(Variant::ZoSvrgAdmm),
            "zo-saga-admm" | "saga" => Ok(Variant::ZoSagaAdmm),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

/// Which iterate a run reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputRule {
    Last,
    /// The iterate following the step with the smallest θ.
    #[default]
    ArgminTheta,
    /// Uniformly random among iterates `1..=T`.
    UniformRandom,
}

impl FromStr for OutputRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "last" => Ok(OutputRule::Last),
            "argmin-theta" => Ok(OutputRule::ArgminTheta),
            "uniform-random" | "random" => Ok(OutputRule::UniformRandom),
            other => Err(Error::InvalidConfig(format!("unknown output rule `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    pub eta: f64,
    pub rho: f64,
    /// `r` in `G = rI − ρηAᵀA`; derived from the spectrum when `None`.
    pub x_curvature: Option<f64>,
    /// `hⱼ` in `Hⱼ = hⱼI − ρBⱼᵀBⱼ`; derived from the spectra when `None`.
    pub y_curvature: Option<Vec<f64>>,
    pub batch_size: usize,
    /// Inner-loop length `m` (SVRG only).
    pub epoch_length: usize,
    pub iterations: usize,
    pub smoothing: SmoothingSchedule,
    pub seed: u64,
    pub output_rule: OutputRule,
    /// Stop once this many main-loop oracle evaluations have been spent.
    pub eval_budget: Option<u64>,
    /// Stationarity-gap sampling stride; `max(1, T/100)` when `None`.
    pub gap_stride: Option<usize>,
    pub divergence_limit: f64,
}

impl SolverConfig {
    pub fn new(variant: Variant, eta: f64, rho: f64) -> Self {
        Self {
            variant,
            eta,
            rho,
            x_curvature: None,
            y_curvature: None,
            batch_size: 20,
            epoch_length: 10,
            iterations: 100,
            smoothing: SmoothingSchedule::Decaying,
            seed: 0,
            output_rule: OutputRule::default(),
            eval_budget: None,
            gap_stride: None,
            divergence_limit: 1e12,
        }
    }

    pub fn gap_stride(&self) -> usize {
        self.gap_stride.unwrap_or((self.iterations / 100).max(1)).max(1)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.eta) {
            return Err(Error::InvalidConfig(format!("eta must be positive, got {}", self.eta)));
        }
        if !positive(self.rho) {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if self.variant.is_stochastic() && !(1..=n).contains(&self.batch_size) {
            return Err(Error::InvalidConfig(format!(
                "batch size must lie in 1..={n}, got {}",
                self.batch_size
            )));
        }
        if self.variant == Variant::ZoSvrgAdmm && self.epoch_length == 0 {
            return Err(Error::InvalidConfig("epoch length must be at least 1".into()));
        }
        self.smoothing.validate()
    }
}

/// Resolved step constants of one run: `η`, `ρ`, the curvature `r` of `G`
/// and `hⱼ` of each `Hⱼ`, plus the spectrum of `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmParams {
    pub eta: f64,
    pub rho: f64,
    pub r: f64,
    pub h: Vec<f64>,
    pub sigma_g_min: f64,
    pub sigma_g_max: f64,
    pub kappa_g: f64,
}

/// Relative margin above the positive-definiteness thresholds of G and Hⱼ.
pub const CURVATURE_MARGIN: f64 = 1.01;

impl AdmmParams {
    pub fn resolve(config: &SolverConfig, report: &ValidationReport) -> Result<Self> {
        let (eta, rho) = (config.eta, config.rho);
        let r_floor = rho * eta * report.sigma_a_max + 1.0;
        let r = match config.x_curvature {
            Some(r) if r > r_floor => r,
            Some(r) => {
                return Err(Error::InvalidConfig(format!(
                    "x curvature r = {r} must exceed rho*eta*sigma_max(AᵀA) + 1 = {r_floor}"
                )))
            }
            None => CURVATURE_MARGIN * r_floor,
        };
        let h = match &config.y_curvature {
            Some(h) => {
                if h.len() != report.sigma_b_max.len() {
                    return Err(Error::InvalidConfig(format!(
                        "expected {} y curvatures, got {}",
                        report.sigma_b_max.len(),
                        h.len()
                    )));
                }
                for (j, (&hj, &sb)) in h.iter().zip(&report.sigma_b_max).enumerate() {
                    if hj <= rho * sb {
                        return Err(Error::InvalidConfig(format!(
                            "y curvature h[{j}] = {hj} must exceed rho*sigma_max(BᵀB) = {}",
                            rho * sb
                        )));
                    }
                }
                h.clone()
            }
            None => report
                .sigma_b_max
                .iter()
                .map(|&sb| CURVATURE_MARGIN * rho * sb + 1e-8)
                .collect(),
        };
        let sigma_g_min = r - rho * eta * report.sigma_a_max;
        let sigma_g_max = r - rho * eta * report.sigma_a_min;
        Ok(Self {
            eta,
            rho,
            r,
            h,
            sigma_g_min,
            sigma_g_max,
            kappa_g: sigma_g_max / sigma_g_min,
        })
    }

    /// `G v = r v − ρη AᵀA v`
    pub fn apply_g(&self, a: &SparseMatrix, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|vi| self.r * vi).collect();
        a.matvec_t_add(-self.rho * self.eta, &a.matvec(v), &mut out);
        out
    }

    /// `Hⱼ v = hⱼ v − ρ BⱼᵀBⱼ v`
    pub fn apply_h(&self, problem: &ConstrainedProblem, j: usize, v: &[f64]) -> Vec<f64> {
        let b = &problem.blocks[j].matrix;
        let mut out: Vec<f64> = v.iter().map(|vi| self.h[j] * vi).collect();
        b.matvec_t_add(-self.rho, &b.matvec(v), &mut out);
        out
    }
}
