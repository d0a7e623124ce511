//! TOML run configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use zoadmm::admm::{
    prescribe_hyperparameters, DimExponent, OutputRule, PrescriptionInput, SolverConfig, Variant,
};
use zoadmm::benchmarks::{
    build_fused_lasso_problem, build_graph, build_group_split_problem, build_lasso_problem,
    correntropy_oracle, load_libsvm, synth_dataset, synth_regression, Dataset,
    DEFAULT_GRAPH_THRESHOLD, DEFAULT_SIGMA, DEFAULT_TAU,
};
use zoadmm::problem::{ConstrainedProblem, SmoothingSchedule, ValidationReport};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSection,
    /// Presence applies the prescribed `m, b, η, ρ` before `[solver]` overrides.
    pub prescribe: Option<PrescribeSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub synthetic: Option<SyntheticSource>,
    pub libsvm: Option<LibsvmSource>,
    pub lasso: Option<LassoSource>,
    #[serde(default)]
    pub penalty: PenaltyKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_tau")]
    pub tau1: f64,
    #[serde(default = "default_tau")]
    pub tau2: f64,
    #[serde(default = "default_threshold")]
    pub graph_threshold: f64,
    /// Width of the overlapping groups for the group penalty.
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    /// Seed for synthetic data; the run seed when absent.
    pub data_seed: Option<u64>,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_threshold() -> f64 {
    DEFAULT_GRAPH_THRESHOLD
}
fn default_group_size() -> usize {
    5
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    #[default]
    FusedLasso,
    Group,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_sparsity")]
    pub sparsity: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_sparsity() -> f64 {
    0.2
}
fn default_noise() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibsvmSource {
    pub path: PathBuf,
    #[serde(default = "default_true")]
    pub scale: bool,
    /// Keep only the first rows of the file.
    pub max_samples: Option<usize>,
}

fn default_true() -> bool {
    true
}

/// Least-squares surrogate with `A = I` and one ℓ₁ block.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoSource {
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_lasso_tau")]
    pub tau: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_lasso_tau() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum VariantField {
    One(String),
    Many(Vec<String>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SmoothingField {
    /// Constant `μ`.
    Fixed(f64),
    /// `"decaying"`: `μₜ = 1/(d√t)`.
    Named(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub variant: Option<VariantField>,
    pub eta: Option<f64>,
    pub rho: Option<f64>,
    pub batch_size: Option<usize>,
    pub epoch_length: Option<usize>,
    pub iterations: Option<usize>,
    pub smoothing: Option<SmoothingField>,
    pub output_rule: Option<String>,
    pub eval_budget: Option<u64>,
    pub gap_stride: Option<usize>,
    pub x_curvature: Option<f64>,
    pub y_curvature: Option<Vec<f64>>,
    pub divergence_limit: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribeSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default = "default_kappa")]
    pub kappa_g: f64,
}

fn default_alpha() -> f64 {
    1.0
}
fn default_l() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub const DEFAULT_ITERATIONS: usize = 100;

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> CliResult<()> {
        let p = &self.problem;
        let sources = [p.synthetic.is_some(), p.libsvm.is_some(), p.lasso.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(CliError::Config(
                "[problem] needs exactly one of [problem.synthetic], [problem.libsvm], [problem.lasso]".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if p.group_size == 0 {
            return Err(CliError::Config("problem.group_size must be at least 1".into()));
        }
        self.variants()?;
        if let Some(rule) = &self.solver.output_rule {
            rule.parse::<OutputRule>()?;
        }
        if let Some(p) = &self.prescribe {
            DimExponent::from_value(p.l)?;
        }
        Ok(())
    }

    pub fn variants(&self) -> CliResult<Vec<Variant>> {
        let names = match &self.solver.variant {
            None => vec!["zo-svrg-admm".to_string()],
            Some(VariantField::One(v)) => vec![v.clone()],
            Some(VariantField::Many(v)) => v.clone(),
        };
        if names.is_empty() {
            return Err(CliError::Config("solver.variant must name at least one variant".into()));
        }
        Ok(names.iter().map(|v| v.parse()).collect::<Result<_, _>>()?)
    }

    pub fn iterations(&self) -> usize {
        self.solver.iterations.unwrap_or(DEFAULT_ITERATIONS)
    }

    /// Builds the problem instance for one run seed.
    pub fn build_problem(&self, seed: u64) -> CliResult<ConstrainedProblem> {
        let p = &self.problem;
        let data_seed = p.data_seed.unwrap_or(seed);
        if let Some(lasso) = &p.lasso {
            let (features, targets, _) = synth_regression(lasso.n, lasso.d, lasso.noise, data_seed)?;
            return Ok(build_lasso_problem(features, targets, lasso.tau)?);
        }
        let dataset = if let Some(s) = &p.synthetic {
            synth_dataset(s.n, s.d, s.sparsity, s.noise, data_seed)?.0
        } else {
            let src = p.libsvm.as_ref().expect("checked source");
            let ds = load_libsvm(&src.path, src.scale)?;
            match src.max_samples {
                Some(m) if m < ds.len() => truncate(&ds, m)?,
                _ => ds,
            }
        };
        let (oracle, lipschitz) = correntropy_oracle(&dataset, p.sigma)?;
        let problem = match p.penalty {
            PenaltyKind::FusedLasso => {
                let graph = build_graph(&dataset, p.graph_threshold)?;
                build_fused_lasso_problem(oracle, lipschitz, &graph, p.tau1, p.tau2)?
            }
            PenaltyKind::Group => {
                let groups = overlapping_groups(dataset.dim(), p.group_size);
                build_group_split_problem(oracle, lipschitz, &groups, p.tau1)?
            }
        };
        Ok(problem)
    }

    /// Solver settings for one `(seed, variant)` run.
    pub fn solver_config(
        &self,
        variant: Variant,
        seed: u64,
        problem: &ConstrainedProblem,
        report: &ValidationReport,
    ) -> CliResult<SolverConfig> {
        let s = &self.solver;
        if self.prescribe.is_none() && (s.eta.is_none() || s.rho.is_none()) {
            return Err(CliError::Config(
                "solver.eta and solver.rho are required unless [prescribe] is present".into(),
            ));
        }
        let mut config = SolverConfig::new(variant, s.eta.unwrap_or(0.0), s.rho.unwrap_or(0.0));
        if let Some(p) = &self.prescribe {
            let prescription = prescribe_hyperparameters(&PrescriptionInput {
                n: problem.objective.num_components(),
                d: problem.dim(),
                lipschitz: problem.lipschitz,
                kappa_g: p.kappa_g,
                sigma_a_min: report.sigma_a_min,
                alpha: p.alpha,
                l: DimExponent::from_value(p.l)?,
                variant,
            })?;
            prescription.apply(&mut config);
            if let Some(eta) = s.eta {
                config.eta = eta;
            }
            if let Some(rho) = s.rho {
                config.rho = rho;
            }
        }
        if let Some(b) = s.batch_size {
            config.batch_size = b;
        }
        config.batch_size = config.batch_size.min(problem.objective.num_components());
        if let Some(m) = s.epoch_length {
            config.epoch_length = m;
        }
        config.iterations = self.iterations();
        config.seed = seed;
        config.smoothing = match &s.smoothing {
            None => SmoothingSchedule::Decaying,
            Some(SmoothingField::Fixed(mu)) => SmoothingSchedule::Fixed(*mu),
            Some(SmoothingField::Named(name)) if name == "decaying" => SmoothingSchedule::Decaying,
            Some(SmoothingField::Named(other)) => {
                return Err(CliError::Config(format!(
                    "solver.smoothing must be a number or \"decaying\", got \"{other}\""
                )))
            }
        };
        if let Some(rule) = &s.output_rule {
            config.output_rule = rule.parse()?;
        }
        config.eval_budget = s.eval_budget;
        config.gap_stride = s.gap_stride;
        config.x_curvature = s.x_curvature;
        config.y_curvature = s.y_curvature.clone();
        if let Some(limit) = s.divergence_limit {
            config.divergence_limit = limit;
        }
        Ok(config)
    }
}

/// Windows of `size` consecutive coordinates, each overlapping the next by one.
pub fn overlapping_groups(d: usize, size: usize) -> Vec<Vec<usize>> {
    if size >= d {
        return vec![(0..d).collect()];
    }
    let step = size.saturating_sub(1).max(1);
    let mut groups = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + size).min(d);
        groups.push((start..end).collect());
        if end == d {
            return groups;
        }
        start += step;
    }
}

fn truncate(ds: &Dataset, rows: usize) -> CliResult<Dataset> {
    let mut triplets = Vec::new();
    for r in 0..rows {
        let (cols, vals) = ds.features.row(r);
        triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, v)));
    }
    let features = zoadmm::linalg::SparseMatrix::from_triplets(rows, ds.dim(), &triplets);
    Ok(Dataset::new(features, ds.labels[..rows].to_vec(), ds.name.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [problem.synthetic]
        n = 40
        d = 5
        [solver]
        eta = 0.1
        rho = 1.0
    "#;

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seeds, vec![0]);
        assert_eq!(c.variants().unwrap(), vec![Variant::ZoSvrgAdmm]);
        let p = c.build_problem(0).unwrap();
        assert_eq!(p.dim(), 5);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("rho = 1.0", "rho = 1.0\nstep = 2");
        match RunConfig::from_toml(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("step"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exactly_one_source() {
        let text = format!("{MINIMAL}\n[problem.lasso]\nn = 10\nd = 2\n");
        assert!(matches!(RunConfig::from_toml(&text), Err(CliError::Config(_))));
        let text = "[problem]\nsigma = 1.0\n[solver]\neta = 0.1\nrho = 1.0\n";
        assert!(matches!(RunConfig::from_toml(text), Err(CliError::Config(_))));
    }

    #[test]
    fn step_constants_are_required_without_prescription() {
        let text = MINIMAL.replace("rho = 1.0", "");
        let c = RunConfig::from_toml(&text).unwrap();
        let p = c.build_problem(0).unwrap();
        let report = zoadmm::problem::validate_problem(&p).unwrap();
        assert!(matches!(
            c.solver_config(Variant::ZoAdmm, 0, &p, &report),
            Err(CliError::Config(_))
        ));
        let text = format!("{}\n[prescribe]\nl = 0\n", MINIMAL.replace("rho = 1.0", ""));
        let c = RunConfig::from_toml(&text).unwrap();
        c.solver_config(Variant::ZoAdmm, 0, &p, &report).unwrap();
    }

    #[test]
    fn prescription_then_overrides() {
        let text = r#"
            [problem.lasso]
            n = 1000
            d = 200
            [solver]
            variant = "zo-svrg-admm"
            eta = 0.05
            [prescribe]
            l = 1
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        let p = c.build_problem(0).unwrap();
        let report = zoadmm::problem::validate_problem(&p).unwrap();
        let s = c.solver_config(Variant::ZoSvrgAdmm, 3, &p, &report).unwrap();
        assert_eq!(s.epoch_length, 10);
        assert_eq!(s.batch_size, 100);
        assert_eq!(s.eta, 0.05);
        assert!(s.rho > 1.0);
        assert_eq!(s.seed, 3);
    }

    #[test]
    fn groups_overlap_and_cover() {
        assert_eq!(overlapping_groups(7, 3), vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6]]);
        assert_eq!(overlapping_groups(2, 5), vec![vec![0, 1]]);
        assert_eq!(overlapping_groups(3, 1), vec![vec![0], vec![1], vec![2]]);
    }
}
