use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zoadmm::admm::{DimExponent, Variant};
use zoadmm_cli::bench::{run_bench, DEFAULT_BUDGET};
use zoadmm_cli::commands::{check_gradient, cmd_run, prescribe_text, report_gradient_check, PrescribeArgs};
use zoadmm_cli::config::{RunConfig, VariantField};
use zoadmm_cli::{init_thread_pool, CliError, CliResult};

#[derive(Parser)]
#[command(name = "zoadmm", version, about = "Zeroth-order stochastic ADMM solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured problem for every seed and variant.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides [output] dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds; overrides the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Single variant; overrides solver.variant.
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Print the prescribed epoch length, batch size, step size and penalty.
    Prescribe {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Gradient Lipschitz constant L.
        #[arg(long = "lipschitz", short = 'L')]
        lipschitz: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Dimension exponent: 0, 0.5 or 1.
        #[arg(long, default_value = "1")]
        l: DimExponent,
        #[arg(long, default_value = "zo-svrg-admm")]
        variant: Variant,
        #[arg(long, default_value_t = 1.0)]
        kappa_g: f64,
        /// Smallest eigenvalue of AᵀA.
        #[arg(long, default_value_t = 1.0)]
        sigma_a_min: f64,
        /// Horizon used for the smoothing recommendation.
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
    },
    /// Check coordinate gradient estimates against analytic gradients.
    CheckGradient {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        mu: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplies the certified Lipschitz constant.
        #[arg(long, default_value_t = 1.0)]
        lipschitz_scale: f64,
    },
    /// Desk-scale SGD/SVRG/SAGA comparison at equal evaluation budgets.
    Bench {
        #[arg(long, default_value = "zoadmm-bench")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Run { config, out, seeds, variant } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(seeds) = seeds {
                if seeds.is_empty() {
                    return Err(CliError::Config("--seeds must not be empty".into()));
                }
                cfg.seeds = seeds;
            }
            if let Some(v) = variant {
                cfg.solver.variant = Some(VariantField::One(v.name().to_string()));
            }
            let out = out
                .or_else(|| cfg.output.dir.clone())
                .unwrap_or_else(|| PathBuf::from("zoadmm-out"));
            cmd_run(&cfg, &out)
        }
        Command::Prescribe { n, d, lipschitz, alpha, l, variant, kappa_g, sigma_a_min, iterations } => {
            let text = prescribe_text(&PrescribeArgs {
                n,
                d,
                lipschitz,
                alpha,
                l,
                variant,
                kappa_g,
                sigma_a_min,
                iterations,
            })?;
            print!("{text}");
            Ok(())
        }
        Command::CheckGradient { config, mu, trials, seed, lipschitz_scale } => {
            let cfg = RunConfig::load(&config)?;
            let problem = cfg.build_problem(cfg.seeds[0])?;
            let lipschitz = problem.lipschitz * lipschitz_scale;
            let check = check_gradient(&problem, lipschitz, mu, trials, seed)?;
            print!("{}", report_gradient_check(&check)?);
            Ok(())
        }
        Command::Bench { out, seeds, budget } => {
            let report = run_bench(seeds, budget, &out)?;
            print!("{}", report.render());
            println!("traces and summary.csv written to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_thread_pool().and_then(|()| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
