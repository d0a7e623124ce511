//! Batch front-end for the zoadmm solvers: TOML-configured runs over seeds
//! and variants with CSV traces, hyperparameter prescriptions, estimator
//! checks and the desk-scale benchmark.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "ZOADMM_THREADS";

/// Sizes the global rayon pool from `ZOADMM_THREADS` when set.
pub fn init_thread_pool() -> CliResult<()> {
    match std::env::var(THREADS_ENV) {
        Ok(value) => {
            let threads: usize = value
                .trim()
                .parse()
                .ok()
                .filter(|t| *t > 0)
                .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))
        }
        Err(_) => Ok(()),
    }
}
