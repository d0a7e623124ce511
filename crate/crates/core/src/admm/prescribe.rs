//! Step-size, penalty and batch-size prescriptions that come with the
//! O(d^{2l}/T) stationarity guarantees of the variance-reduced variants.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problem::{SmoothingSchedule, ValidationReport};

use super::{AdmmParams, SolverConfig, Variant};

/// The exponent `l ∈ {0, 1/2, 1}` trading batch size against the dimension
/// factor in the rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimExponent {
    Zero,
    Half,
    One,
}

impl DimExponent {
    pub fn value(&self) -> f64 {
        match self {
            DimExponent::Zero => 0.0,
            DimExponent::Half => 0.5,
            DimExponent::One => 1.0,
        }
    }

    pub fn from_value(l: f64) -> Result<Self> {
        match l {
            l if l == 0.0 => Ok(DimExponent::Zero),
            l if l == 0.5 => Ok(DimExponent::Half),
            l if l == 1.0 => Ok(DimExponent::One),
            other => Err(Error::InvalidConfig(format!("l must be one of 0, 0.5, 1; got {other}"))),
        }
    }
}

impl FromStr for DimExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("l must be one of 0, 0.5, 1; got `{s}`")))?;
        Self::from_value(v)
    }
}

impl fmt::Display for DimExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrescriptionInput {
    pub n: usize,
    pub d: usize,
    pub lipschitz: f64,
    /// Condition number of `G`; 1 when unknown.
    pub kappa_g: f64,
    pub sigma_a_min: f64,
    pub alpha: f64,
    pub l: DimExponent,
    pub variant: Variant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prescription {
    pub variant: Variant,
    /// `m`; only meaningful for SVRG.
    pub epoch_length: Option<usize>,
    pub batch_size: usize,
    pub eta: f64,
    pub rho: f64,
    /// `σ_min(G)` assumed when computing `η` (its lower bound, 1).
    pub sigma_g_min_assumed: f64,
    pub smoothing: SmoothingSchedule,
}

/// Integer ceiling that ignores floating noise just above an integer, so that
/// e.g. `1000^(2/3)` rounds to 100 rather than 101.
fn stable_ceil(v: f64) -> usize {
    let nearest = v.round();
    if (v - nearest).abs() <= 1e-9 * v.abs().max(1.0) {
        nearest as usize
    } else {
        v.ceil() as usize
    }
}

/// SVRG: `m = ⌈n^{1/3}⌉`, `b = ⌈d^{1−l} n^{2/3}⌉`, `η = ασ_min(G)/(9d^l L)`,
/// `ρ = 6√71 κ_G d^l L/(σ^A_min α)`.
/// SAGA: `b = ⌈n^{2/3} d^{(1−l)/3}⌉`, `η = ασ_min(G)/(33d^l L)`,
/// `ρ = 6√791 κ_G d^l L/(σ^A_min α)`.
///
/// The deterministic variant takes the SVRG constants with `b = n` (a full
/// batch makes the SVRG estimator exact), and the plain mini-batch variant
/// the SAGA constants, since it runs the SAGA loop without a table. Batch
/// sizes are capped at `n`. `σ_min(G)` is taken at its lower bound 1.
pub fn prescribe_hyperparameters(input: &PrescriptionInput) -> Result<Prescription> {
    if !(input.alpha > 0.0 && input.alpha <= 1.0) {
        return Err(Error::InvalidAlpha(input.alpha));
    }
    if !(input.lipschitz > 0.0 && input.lipschitz.is_finite()) {
        return Err(Error::InvalidLipschitz(input.lipschitz));
    }
    if !(input.sigma_a_min > 0.0) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    if input.n == 0 || input.d == 0 {
        return Err(Error::InvalidConfig("n and d must be positive".into()));
    }
    if !(input.kappa_g >= 1.0) {
        return Err(Error::InvalidConfig(format!("kappa_G must be at least 1, got {}", input.kappa_g)));
    }
    let n = input.n as f64;
    let d = input.d as f64;
    let l = input.l.value();
    let dl = d.powf(l);
    let sigma_g_min = 1.0;

    let svrg_family = matches!(input.variant, Variant::ZoSvrgAdmm | Variant::ZoAdmm);
    let (eta_den, rho_const) = if svrg_family {
        (9.0, 6.0 * 71f64.sqrt())
    } else {
        (33.0, 6.0 * 791f64.sqrt())
    };
    let eta = input.alpha * sigma_g_min / (eta_den * dl * input.lipschitz);
    let rho = rho_const * input.kappa_g * dl * input.lipschitz / (input.sigma_a_min * input.alpha);

    let (epoch_length, batch) = match input.variant {
        Variant::ZoSvrgAdmm => (
            Some(stable_ceil(n.cbrt())),
            stable_ceil(d.powf(1.0 - l) * n.powf(2.0 / 3.0)),
        ),
        Variant::ZoAdmm => (Some(stable_ceil(n.cbrt())), input.n),
        Variant::ZoSagaAdmm | Variant::ZoSgdAdmm => {
            (None, stable_ceil(n.powf(2.0 / 3.0) * d.powf((1.0 - l) / 3.0)))
        }
    };

    Ok(Prescription {
        variant: input.variant,
        epoch_length,
        batch_size: batch.clamp(1, input.n),
        eta,
        rho,
        sigma_g_min_assumed: sigma_g_min,
        smoothing: SmoothingSchedule::Decaying,
    })
}

impl Prescription {
    /// Writes the prescribed constants into `config`.
    pub fn apply(&self, config: &mut SolverConfig) {
        config.eta = self.eta;
        config.rho = self.rho;
        config.batch_size = self.batch_size;
        if let Some(m) = self.epoch_length {
            config.epoch_length = m;
        }
        config.smoothing = self.smoothing;
    }

    /// `μ = 1/(d√T)`, the smoothing level matching a budget of `T` iterations.
    pub fn smoothing_for_horizon(d: usize, iterations: usize) -> f64 {
        SmoothingSchedule::Decaying.value(iterations, d)
    }

    /// Spectrum of the `G` this prescription induces on a validated problem.
    pub fn linearization(&self, report: &ValidationReport) -> Result<AdmmParams> {
        let config = SolverConfig::new(self.variant, self.eta, self.rho);
        AdmmParams::resolve(&config, report)
    }
}
