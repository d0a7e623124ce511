use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use zoadmm::admm::{
    prescribe_hyperparameters, run, AdmmParams, DimExponent, Prescription, PrescriptionInput, SolverConfig,
    Variant,
};
use zoadmm::diagnostics::write_trace_csv;
use zoadmm::problem::{validate_problem, ConstrainedProblem, SmoothingSchedule};
use zoadmm::zo_grad::estimate_component_gradient;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SUMMARY_HEADER: &str =
    "seed,variant,iterations,evals,diag_evals,final_objective,solution_iter,solution_objective,solution_gap,final_primal_res,wall_s";

/// Outcome of one `(seed, variant)` run.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub seed: u64,
    pub variant: Variant,
    pub iterations: usize,
    pub evals: u64,
    pub diag_evals: u64,
    pub final_objective: f64,
    pub solution_iter: usize,
    pub solution_objective: f64,
    pub solution_gap: Option<f64>,
    pub final_primal_res: f64,
    pub wall_seconds: f64,
    pub trace_path: PathBuf,
}

impl SummaryRow {
    fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:.6}",
            self.seed,
            self.variant,
            self.iterations,
            self.evals,
            self.diag_evals,
            self.final_objective,
            self.solution_iter,
            self.solution_objective,
            self.solution_gap.map(|g| g.to_string()).unwrap_or_default(),
            self.final_primal_res,
            self.wall_seconds
        )
    }
}

pub fn trace_path(out: &Path, variants: &[Variant], variant: Variant, seed: u64) -> PathBuf {
    if variants.len() == 1 {
        out.join(format!("trace_{seed}.csv"))
    } else {
        out.join(variant.name()).join(format!("trace_{seed}.csv"))
    }
}

fn run_one(config: &RunConfig, variants: &[Variant], variant: Variant, seed: u64, out: &Path) -> CliResult<SummaryRow> {
    let start = Instant::now();
    let problem = config.build_problem(seed)?;
    let report = validate_problem(&problem)?;
    let solver = config.solver_config(variant, seed, &problem, &report)?;
    info!("seed {seed}, {variant}: eta={} rho={} b={} T={}", solver.eta, solver.rho, solver.batch_size, solver.iterations);
    let output = run(&problem, &solver)?;

    let path = trace_path(out, variants, variant, seed);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut file = BufWriter::new(File::create(&path)?);
    write_trace_csv(&output.trace, &mut file)?;
    file.flush()?;
    write_params(&path.with_extension("params"), config, &solver, &output.params)?;

    let last = output.trace.last();
    let solution_objective = match output.solution.iter {
        0 => f64::NAN,
        k => output.trace[k - 1].objective,
    };
    Ok(SummaryRow {
        seed,
        variant,
        iterations: output.trace.len(),
        evals: output.evals,
        diag_evals: output.diag_evals,
        final_objective: last.map_or(f64::NAN, |r| r.objective),
        solution_iter: output.solution.iter,
        solution_objective,
        solution_gap: output.solution_gap.map(|g| g.total),
        final_primal_res: last.map_or(f64::NAN, |r| r.primal_residual),
        wall_seconds: start.elapsed().as_secs_f64(),
        trace_path: path,
    })
}

/// Records the step constants a trace was produced with, next to the trace.
fn write_params(path: &Path, config: &RunConfig, solver: &SolverConfig, params: &AdmmParams) -> CliResult<()> {
    let h: Vec<String> = params.h.iter().map(|h| h.to_string()).collect();
    let smoothing = match solver.smoothing {
        SmoothingSchedule::Fixed(mu) => mu.to_string(),
        SmoothingSchedule::Decaying => "\"decaying\"".to_string(),
    };
    let text = format!(
        "variant = \"{}\"\nprescribed = {}\neta = {}\nrho = {}\nbatch_size = {}\nepoch_length = {}\n\
         iterations = {}\nsmoothing = {smoothing}\nx_curvature = {}\ny_curvature = [{}]\nseed = {}\n",
        solver.variant,
        config.prescribe.is_some(),
        params.eta,
        params.rho,
        solver.batch_size,
        solver.epoch_length,
        solver.iterations,
        params.r,
        h.join(", "),
        solver.seed,
    );
    fs::write(path, text)?;
    Ok(())
}

/// Runs every `(seed, variant)` pair, concurrently, writing one trace per
/// pair and `summary.csv` in seed-major order.
pub fn run_jobs(config: &RunConfig, out: &Path) -> CliResult<Vec<SummaryRow>> {
    let variants = config.variants()?;
    fs::create_dir_all(out)?;
    let jobs: Vec<(u64, Variant)> = config
        .seeds
        .iter()
        .flat_map(|&s| variants.iter().map(move |&v| (s, v)))
        .collect();
    let results: Vec<CliResult<SummaryRow>> = jobs
        .par_iter()
        .map(|&(seed, variant)| run_one(config, &variants, variant, seed, out))
        .collect();
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut summary = BufWriter::new(File::create(out.join("summary.csv"))?);
    writeln!(summary, "{SUMMARY_HEADER}")?;
    for row in &rows {
        row.write_csv(&mut summary)?;
    }
    summary.flush()?;
    Ok(rows)
}

pub fn cmd_run(config: &RunConfig, out: &Path) -> CliResult<()> {
    let rows = run_jobs(config, out)?;
    for row in &rows {
        println!(
            "seed {} {}: {} iterations, {} evals, final objective {:.6e}, trace {}",
            row.seed,
            row.variant,
            row.iterations,
            row.evals,
            row.final_objective,
            row.trace_path.display()
        );
    }
    println!("summary written to {}", out.join("summary.csv").display());
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PrescribeArgs {
    pub n: usize,
    pub d: usize,
    pub lipschitz: f64,
    pub alpha: f64,
    pub l: DimExponent,
    pub variant: Variant,
    pub kappa_g: f64,
    pub sigma_a_min: f64,
    pub iterations: usize,
}

/// `[solver]` fragment with the prescribed constants.
pub fn prescribe_text(args: &PrescribeArgs) -> CliResult<String> {
    let p = prescribe_hyperparameters(&PrescriptionInput {
        n: args.n,
        d: args.d,
        lipschitz: args.lipschitz,
        kappa_g: args.kappa_g,
        sigma_a_min: args.sigma_a_min,
        alpha: args.alpha,
        l: args.l,
        variant: args.variant,
    })?;
    let mut text = String::from("[solver]\n");
    text += &format!("variant = \"{}\"\n", p.variant);
    if let Some(m) = p.epoch_length {
        text += &format!("epoch_length = {m}\n");
    }
    text += &format!("batch_size = {}\n", p.batch_size);
    text += &format!("eta = {:e}\n", p.eta);
    text += &format!("rho = {:e}\n", p.rho);
    text += "smoothing = \"decaying\"\n";
    text += &format!(
        "# mu at T = {}: {:e} (sigma_min(G) assumed {})\n",
        args.iterations,
        Prescription::smoothing_for_horizon(args.d, args.iterations),
        p.sigma_g_min_assumed
    );
    Ok(text)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientCheck {
    pub trials: usize,
    pub mu: f64,
    pub lipschitz: f64,
    pub bound: f64,
    pub max_error: f64,
    /// `(trial, component, coordinate, error, allowed)` of the worst excess.
    pub worst: Option<(usize, usize, usize, f64, f64)>,
    pub violations: usize,
}

/// Compares coordinate estimates with analytic gradients at random points;
/// each coordinate may deviate by `Lμ/2` plus a rounding allowance of a few
/// ulps of `fᵢ` divided by `μ`.
pub fn check_gradient(problem: &ConstrainedProblem, lipschitz: f64, mu: f64, trials: usize, seed: u64) -> CliResult<GradientCheck> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(CliError::Config(format!("mu must be positive, got {mu}")));
    }
    let oracle = &problem.objective;
    if !oracle.has_analytic_gradient() {
        return Err(CliError::Config("problem has no analytic test gradient".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = lipschitz * mu / 2.0;
    let mut result = GradientCheck {
        trials,
        mu,
        lipschitz,
        bound,
        max_error: 0.0,
        worst: None,
        violations: 0,
    };
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..trials {
        let x: Vec<f64> = (0..problem.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let i = rng.random_range(0..oracle.num_components());
        let est = estimate_component_gradient(oracle, i, &x, mu)?;
        let exact = oracle.analytic_gradient(i, &x).expect("analytic gradient");
        let allowed = bound + 16.0 * f64::EPSILON * (1.0 + oracle.eval(i, &x).abs()) / mu;
        let mut violated = false;
        for (j, (e, g)) in est.iter().zip(&exact).enumerate() {
            let err = (e - g).abs();
            result.max_error = result.max_error.max(err);
            if err - allowed > worst_excess {
                worst_excess = err - allowed;
                result.worst = Some((trial, i, j, err, allowed));
            }
            violated |= err > allowed;
        }
        result.violations += usize::from(violated);
    }
    Ok(result)
}

pub fn report_gradient_check(check: &GradientCheck) -> CliResult<String> {
    let mut text = format!(
        "trials = {}\nmu = {:e}\nlipschitz = {:e}\nbound = {:e}\nmax_error = {:e}\nviolations = {}\n",
        check.trials, check.mu, check.lipschitz, check.bound, check.max_error, check.violations
    );
    if check.violations > 0 {
        let (trial, i, j, err, allowed) = check.worst.expect("worst case recorded");
        let detail = format!(
            "trial {trial}, component {i}, coordinate {j}: error {err:e} exceeds {allowed:e}"
        );
        text += &format!("worst = \"{detail}\"\n");
        print!("{text}");
        return Err(CliError::BoundViolation(detail));
    }
    Ok(text)
}
