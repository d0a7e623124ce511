//! Desk-scale comparison of the stochastic variants at equal oracle budgets
//! on the synthetic correntropy fused-lasso problem.

use std::path::Path;

use zoadmm::admm::Variant;

use crate::commands::{run_jobs, SummaryRow};
use crate::config::RunConfig;
use crate::error::CliResult;

pub const BENCH_VARIANTS: [Variant; 3] = [Variant::ZoSgdAdmm, Variant::ZoSvrgAdmm, Variant::ZoSagaAdmm];

/// Default evaluation budget per run.
pub const DEFAULT_BUDGET: u64 = 4_000_000;

/// The benchmark as a run configuration: n=2000, d=50, τ₁=τ₂=1e-5,
/// `μₜ = 1/(d√t)`, graph threshold 0.05, `η = 0.2`, `ρ = 1`, `b = 20`,
/// `m = ⌈n^{1/3}⌉ = 13`.
pub fn bench_config(seeds: Vec<u64>, budget: u64) -> RunConfig {
    let text = format!(
        r#"
        seeds = {seeds:?}
        [problem]
        graph_threshold = 0.05
        tau1 = 1e-5
        tau2 = 1e-5
        [problem.synthetic]
        n = 2000
        d = 50
        sparsity = 0.2
        noise = 0.1
        [solver]
        variant = ["zo-sgd-admm", "zo-svrg-admm", "zo-saga-admm"]
        eta = 0.2
        rho = 1.0
        batch_size = 20
        epoch_length = 13
        iterations = 100000000
        eval_budget = {budget}
        output_rule = "last"
        "#
    );
    RunConfig::from_toml(&text).expect("bench configuration is valid")
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub rows: Vec<SummaryRow>,
    pub seeds: Vec<u64>,
    /// Seeds where SVRG (resp. SAGA) ends below SGD.
    pub svrg_wins: usize,
    pub saga_wins: usize,
}

fn final_objective(rows: &[SummaryRow], seed: u64, variant: Variant) -> f64 {
    rows.iter()
        .find(|r| r.seed == seed && r.variant == variant)
        .map_or(f64::NAN, |r| r.final_objective)
}

pub fn run_bench(seeds: Vec<u64>, budget: u64, out: &Path) -> CliResult<BenchReport> {
    let config = bench_config(seeds.clone(), budget);
    let rows = run_jobs(&config, out)?;
    let wins = |v: Variant| {
        seeds
            .iter()
            .filter(|&&s| final_objective(&rows, s, v) < final_objective(&rows, s, Variant::ZoSgdAdmm))
            .count()
    };
    Ok(BenchReport {
        svrg_wins: wins(Variant::ZoSvrgAdmm),
        saga_wins: wins(Variant::ZoSagaAdmm),
        rows,
        seeds,
    })
}

impl BenchReport {
    pub fn render(&self) -> String {
        let mut text = String::from("seed  zo-sgd-admm   zo-svrg-admm  zo-saga-admm\n");
        for &s in &self.seeds {
            text += &format!("{s:<5}");
            for v in BENCH_VARIANTS {
                text += &format!(" {:<13.7}", final_objective(&self.rows, s, v));
            }
            text += "\n";
        }
        text += &format!(
            "svrg beats sgd in {}/{} seeds, saga beats sgd in {}/{} seeds\n",
            self.svrg_wins,
            self.seeds.len(),
            self.saga_wins,
            self.seeds.len()
        );
        text
    }
}
