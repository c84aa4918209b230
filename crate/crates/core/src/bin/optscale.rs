use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use optscale::experiments::{
    all_passed, run_consensus_mc, run_dqp_example, run_single, Check, ExperimentConfig, Mode,
};
use optscale::io::{write_json, write_records_csv, write_round_log_csv, write_trace_csv};
use optscale::Result;

/// Optimally scaled ADMM experiments.
#[derive(Debug, Parser)]
#[command(name = "optscale", version)]
struct Cli {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Arrowhead problem JSON.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Graph JSON (single-run).
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    n_min: usize,
    #[arg(long, default_value_t = 20)]
    n_max: usize,
    /// Graph size increment between n-min and n-max.
    #[arg(long, default_value_t = 1)]
    n_step: usize,
    /// Erdős–Rényi density parameter; repeatable.
    #[arg(long, num_args = 1.., default_values_t = vec![0.2, 0.8])]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step-size override (baseline step in dqp-example).
    #[arg(long)]
    rho: Option<f64>,
    /// Comma-separated cost shares of the shared variable.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Lower bound on weighted degrees during weight optimization.
    #[arg(long)]
    lmi_eps: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Cli {
    fn config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.mode);
        cfg.problem = self.problem.clone();
        cfg.graph = self.graph.clone();
        cfg.n_values = (self.n_min..=self.n_max).step_by(self.n_step.max(1)).collect();
        cfg.epsilons = self.epsilon.clone();
        cfg.trials = self.trials;
        cfg.seed = self.seed;
        cfg.rho = self.rho;
        cfg.alphas = self.alphas.clone();
        cfg.lmi_eps = self.lmi_eps;
        cfg
    }
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<(serde_json::Value, Vec<Check>)> {
    match cfg.mode {
        Mode::DqpExample => {
            let r = run_dqp_example(cfg)?;
            println!("alphas        ({})", fmt(&r.alphas));
            println!("Q_hat         ({})", fmt(&r.qhat));
            println!("q_hat         ({})", fmt(&r.qlin));
            println!("lambda2*      {:.6}", r.plan.lambda2);
            println!("weights       ({})", fmt(&r.plan.weights));
            println!("rho*          {:.6}", r.plan.rho);
            println!("phi* (pred)   {:.6}", r.plan.phi);
            println!("phi  (emp)    {:.6} centralized, {:.6} protocol", r.optimal.empirical_factor, r.protocol_factor);
            println!("unit weights, rho = {}:", cfg.rho.unwrap_or(optscale::experiments::BASELINE_RHO));
            println!("  closed form {:.6}", r.baseline_analytic);
            println!("  empirical   {:.6} (iteration matrix {:.6})", r.baseline_empirical, r.baseline_recursion);
            write_json(&out.join("plan.json"), &r.plan)?;
            write_trace_csv(File::create(out.join("trace.csv"))?, &r.optimal.trace.iterates, &r.optimal.trace.distances)?;
            write_records_csv(File::create(out.join("normalized_error.csv"))?, &r.error_rows())?;
            write_round_log_csv(File::create(out.join("rounds.csv"))?, &r.protocol.rounds)?;
            Ok((serde_json::to_value(&r)?, r.checks))
        }
        Mode::ConsensusMc => {
            let r = run_consensus_mc(cfg)?;
            println!("{:>4} {:>5} {:>10} {:>10} {:>10}", "n", "eps", "untuned", "unit-w", "optimized");
            for row in &r.rows {
                println!(
                    "{:>4} {:>5} {:>10.6} {:>10.6} {:>10.6}",
                    row.n, row.epsilon, row.mean_factor_untuned, row.mean_factor_unit_weights, row.mean_factor_optimized
                );
            }
            write_records_csv(File::create(out.join("mc_summary.csv"))?, &r.rows)?;
            Ok((serde_json::to_value(&r)?, r.checks))
        }
        Mode::SingleRun => {
            let r = run_single(cfg)?;
            println!("lambda2*      {:.6}", r.plan.lambda2);
            println!("rho*          {:.6}", r.plan.rho);
            println!("phi predicted {:.6}", r.run.predicted_factor);
            println!("phi empirical {:.6}", r.run.empirical_factor);
            write_json(&out.join("plan.json"), &r.plan)?;
            write_trace_csv(File::create(out.join("trace.csv"))?, &r.run.trace.iterates, &r.run.trace.distances)?;
            Ok((serde_json::to_value(&r)?, r.checks))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.config();
    if let Err(e) = fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::FAILURE;
    }
    let outcome = cfg.validate().and_then(|_| execute(&cfg, &cli.out));
    let (report, ok) = match outcome {
        Ok((value, checks)) => {
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let ok = all_passed(&checks);
            (json!({ "config": cfg, "passed": ok, "result": value }), ok)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (json!({ "config": cfg, "passed": false, "error": e.to_string() }), false)
        }
    };
    if let Err(e) = write_json(&cli.out.join("report.json"), &report) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::FAILURE;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
