//! Experiment drivers behind the `optscale` binary.
//!
//! Every driver returns a serializable report carrying named checks; the binary exits with
//! status 0 exactly when all of them pass.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_erdos_renyi, GraphRng, WeightedGraph, MAX_RESAMPLES};
use crate::io::{read_graph, read_problem, ProblemFile};
use crate::qp::{allocate_alphas, reduce_to_consensus, shared_optimum, AlphaSplit, ArrowheadQp, ConsensusQp};
use crate::scaled_admm::{contraction_factor, empirical_factor, AdmmEngine, AdmmTrace, RunOptions};
use crate::simnet::{equivalence_check, equivalent, matrix_trace, run_protocol, ProtocolTrace};
use crate::tuning::{
    kappa_for, optimal_scaling_pipeline, second_largest_magnitude, PlanFile, ScalingPlan, SpectralSummary,
    WeightOptOptions,
};

/// Problem shipped with the crate: three agents with 2×2 private blocks on a line graph.
pub const BUNDLED_PROBLEM: &str = include_str!("../data/dqp_example.json");

/// Predicted and empirical factors must agree this closely.
pub const FACTOR_AGREEMENT: f64 = 0.03;

/// Step-size of the unit-weight baseline in the bundled example.
pub const BASELINE_RHO: f64 = 0.55;

const MAX_ITERS: usize = 400;
const RECURSION_STEPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    DqpExample,
    ConsensusMc,
    SingleRun,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub problem: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub n_values: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub rho: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub lmi_eps: Option<f64>,
    /// Bisection tolerance of the weight optimization.
    pub weight_tol: f64,
    /// Monte Carlo instances per cell that also get an empirical run.
    pub spot_checks: usize,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            problem: None,
            graph: None,
            n_values: (5..=20).collect(),
            epsilons: vec![0.2, 0.8],
            trials: 50,
            seed: 0,
            rho: None,
            alphas: None,
            lmi_eps: None,
            weight_tol: WeightOptOptions::default().tol,
            spot_checks: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::Config("graph sizes must be at least 2".into()));
        }
        if let Some(r) = self.rho.filter(|r| !(*r > 0.0)) {
            return Err(Error::Config(format!("rho must be positive, got {r}")));
        }
        Ok(())
    }

    fn weight_options(&self) -> WeightOptOptions {
        WeightOptOptions { eps: self.lmi_eps, tol: self.weight_tol, ..WeightOptOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }

    fn factors(name: &str, predicted: f64, empirical: f64) -> Self {
        let gap = (predicted - empirical).abs();
        Self::new(name, gap <= FACTOR_AGREEMENT, format!("predicted {predicted:.6}, empirical {empirical:.6}, gap {gap:.2e}"))
    }
}

/// One scaled run: predicted factor against what the iterates show.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub rho: f64,
    pub kappa: f64,
    pub lambda_second: f64,
    pub predicted_factor: f64,
    pub empirical_factor: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub trace: AdmmTrace,
}

#[derive(Debug, Clone, Serialize)]
pub struct DqpReport {
    pub alphas: Vec<f64>,
    pub qhat: Vec<f64>,
    pub qlin: Vec<f64>,
    pub shared_optimum: f64,
    pub plan: PlanFile,
    pub optimal: RunSummary,
    pub protocol_factor: f64,
    /// Closed-form factor for unit weights at the baseline step-size, `κ` from the unit degrees.
    pub baseline_analytic: f64,
    /// Unit weights with the original curvatures at the baseline step-size.
    pub baseline_empirical: f64,
    /// Contraction of the exact baseline iteration matrix.
    pub baseline_recursion: f64,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub protocol: ProtocolTrace,
    #[serde(skip)]
    pub baseline_trace: AdmmTrace,
}

/// Normalized errors of two runs side by side, padded with the last value.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRow {
    pub iter: usize,
    pub optimal: f64,
    pub unit_weights: f64,
}

impl DqpReport {
    pub fn error_rows(&self) -> Vec<ErrorRow> {
        let a = self.optimal.trace.normalized_errors();
        let b = self.baseline_trace.normalized_errors();
        let at = |v: &[f64], k: usize| v.get(k).or(v.last()).copied().unwrap_or(0.0);
        (0..a.len().max(b.len())).map(|k| ErrorRow { iter: k, optimal: at(&a, k), unit_weights: at(&b, k) }).collect()
    }
}

pub fn bundled_problem() -> Result<(ArrowheadQp, Option<AlphaSplit>)> {
    serde_json::from_str::<ProblemFile>(BUNDLED_PROBLEM)?.to_problem()
}

/// Override, then the file's shares, then the constructive allocation.
fn choose_alphas(p: &ArrowheadQp, from_file: Option<AlphaSplit>, cfg: &ExperimentConfig) -> Result<AlphaSplit> {
    match (&cfg.alphas, from_file) {
        (Some(a), _) => AlphaSplit::new(a.clone()),
        (None, Some(a)) => Ok(a),
        (None, None) => allocate_alphas(p),
    }
}

/// Runs the centralized engine under `plan` and measures its contraction.
pub fn scaled_run(c: &ConsensusQp, plan: &ScalingPlan, topology: &WeightedGraph, x0: &[f64]) -> Result<RunSummary> {
    let g = positive_support(&plan.graph(topology)?)?;
    let engine = AdmmEngine::consensus(&plan.q_transformed, &c.qlin, &g, plan.rho_star)?;
    let xbar = vec![shared_optimum(c); c.node_count()];
    let trace = engine.run(x0, &run_options(&xbar), Some(&xbar))?;
    let predicted = second_largest_magnitude(plan.rho_star, plan.kappa, &plan.summary(topology)?);
    Ok(RunSummary {
        rho: plan.rho_star,
        kappa: plan.kappa,
        lambda_second: plan.lambda_second,
        predicted_factor: predicted,
        empirical_factor: empirical_factor(&trace, &xbar)?,
        iterations: trace.len() - 1,
        trace,
    })
}

fn run_options(fixed_point: &[f64]) -> RunOptions {
    RunOptions { iters: MAX_ITERS, stop_distance: Some(empirical_floor(fixed_point)) }
}

fn empirical_floor(fixed_point: &[f64]) -> f64 {
    1e3 * f64::EPSILON * crate::linalg::norm2(fixed_point).max(1.0)
}

/// The graph restricted to its positive-weight edges.
pub fn positive_support(g: &WeightedGraph) -> Result<WeightedGraph> {
    let kept = g.edges().iter().filter(|e| e.w > 0.0).map(|e| (e.i, e.j, e.w));
    WeightedGraph::new(g.node_count(), kept)
}

/// Contraction of a protocol's max deviation from the optimum.
pub fn protocol_factor(t: &ProtocolTrace) -> Result<f64> {
    let devs: Vec<f64> = t.rounds.iter().map(|r| r.max_dev).collect();
    contraction_factor(&devs, empirical_floor(&[t.optimum]))
}

pub fn run_dqp_example(cfg: &ExperimentConfig) -> Result<DqpReport> {
    let (p, file_alphas) = match &cfg.problem {
        Some(path) => read_problem(path)?,
        None => bundled_problem()?,
    };
    let alphas = choose_alphas(&p, file_alphas, cfg)?;
    let c = reduce_to_consensus(&p, &alphas)?;
    let line = WeightedGraph::path(c.node_count());
    let (plan, _) = optimal_scaling_pipeline(&c, &line, &cfg.weight_options())?;
    let xbar = shared_optimum(&c);
    let x0: Vec<f64> = c.qhat.iter().zip(&c.qlin).map(|(a, b)| -b / a).collect();

    let optimal = scaled_run(&c, &plan, &line, &x0)?;
    let c_scaled = c.with_curvatures(plan.q_transformed.clone())?;
    let support = positive_support(&plan.graph(&line)?)?;
    let rounds = optimal.iterations.max(60);
    let protocol = run_protocol(&c_scaled, &support, plan.rho_star, &x0, rounds)?;
    let reference = matrix_trace(&c_scaled, &support, plan.rho_star, &x0, rounds)?;
    let deviations = equivalence_check(&protocol.iterates(), &reference)?;
    let protocol_factor = protocol_factor(&protocol)?;

    let rho_b = cfg.rho.unwrap_or(BASELINE_RHO);
    let unit = line.with_unit_weights();
    let kappa_unit = kappa_for(&unit.degrees(), &c.qhat);
    let baseline_analytic = second_largest_magnitude(rho_b, kappa_unit, &SpectralSummary::from_graph(&unit, kappa_unit)?);
    let engine = AdmmEngine::consensus(&c.qhat, &c.qlin, &unit, rho_b)?;
    let fixed = vec![xbar; c.node_count()];
    let baseline_trace = engine.run(&x0, &run_options(&fixed), Some(&fixed))?;
    let baseline_empirical = empirical_factor(&baseline_trace, &fixed)?;
    let m = crate::scaled_admm::iteration_matrix(rho_b, &crate::graph::build_matrices(&unit), &c.qhat)?;
    let baseline_recursion = crate::scaled_admm::recursion_factor(&m, &baseline_trace.iterates[1], &x0, RECURSION_STEPS)?;

    let checks = vec![
        Check::new("lower_bound", plan.phi_star >= 0.5 - 1e-12, format!("phi* = {}", plan.phi_star)),
        Check::factors("optimal_centralized", plan.phi_star, optimal.empirical_factor),
        Check::factors("optimal_protocol", plan.phi_star, protocol_factor),
        Check::new(
            "protocol_matches_recursion",
            equivalent(&deviations),
            format!("max deviation {:.2e}", deviations.iter().fold(0.0, |m: f64, d| m.max(*d))),
        ),
        Check::factors("baseline_recursion", baseline_recursion, baseline_empirical),
    ];

    Ok(DqpReport {
        alphas: alphas.as_slice().to_vec(),
        qhat: c.qhat.clone(),
        qlin: c.qlin.clone(),
        shared_optimum: xbar,
        plan: plan.to_file(),
        optimal,
        protocol_factor,
        baseline_analytic,
        baseline_empirical,
        baseline_recursion,
        checks,
        protocol,
        baseline_trace,
    })
}

/// Analytic factors of one Monte Carlo instance at three levels of tuning.
#[derive(Debug, Clone, Serialize)]
pub struct McInstance {
    pub n: usize,
    pub epsilon: f64,
    pub trial: usize,
    pub seed: u64,
    pub attempts: usize,
    pub edges: usize,
    /// Unit weights, `ρ = 1`.
    pub factor_untuned: f64,
    /// Unit weights, optimal `ρ`.
    pub factor_unit_weights: f64,
    /// Optimized weights, optimal `ρ`.
    pub factor_optimized: f64,
    pub lambda_second_unit: f64,
    pub lambda_second_optimized: f64,
    /// `|empirical − predicted|` for the optimized plan, when spot-checked.
    pub empirical_gap: Option<f64>,
}

/// One row of `mc_summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub mean_factor_untuned: f64,
    pub mean_factor_unit_weights: f64,
    pub mean_factor_optimized: f64,
    pub mean_lambda2_unit: f64,
    pub mean_lambda2_optimized: f64,
    pub max_empirical_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub rows: Vec<McRow>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub instances: Vec<McInstance>,
}

/// Per-trial seed; distinct for every `(n, ε index, trial)`.
pub fn trial_seed(base: u64, n: usize, eps_index: usize, trial: usize) -> u64 {
    let mut rng = GraphRng::seed_from_u64(base);
    rng.set_stream(((n as u64) << 40) | ((eps_index as u64) << 32) | trial as u64);
    rng.random()
}

fn mc_instance(cfg: &ExperimentConfig, n: usize, ei: usize, trial: usize) -> Result<McInstance> {
    let epsilon = cfg.epsilons[ei];
    let seed = trial_seed(cfg.seed, n, ei, trial);
    let (g, attempts) = connected_erdos_renyi(n, epsilon, seed, MAX_RESAMPLES)?;
    let c = ConsensusQp::average(n, 1.0)?;

    let unit = ScalingPlan::for_weights(&c, &g)?;
    let s_unit = unit.summary(&g)?;
    let (opt, _) = optimal_scaling_pipeline(&c, &g, &cfg.weight_options())?;
    let s_opt = opt.summary(&g)?;

    let empirical_gap = if trial < cfg.spot_checks {
        let mut rng = GraphRng::seed_from_u64(seed);
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let run = scaled_run(&c, &opt, &g, &x0)?;
        Some((run.empirical_factor - run.predicted_factor).abs())
    } else {
        None
    };

    Ok(McInstance {
        n,
        epsilon,
        trial,
        seed,
        attempts,
        edges: g.edge_count(),
        factor_untuned: second_largest_magnitude(1.0, unit.kappa, &s_unit),
        factor_unit_weights: second_largest_magnitude(unit.rho_star, unit.kappa, &s_unit),
        factor_optimized: second_largest_magnitude(opt.rho_star, opt.kappa, &s_opt),
        lambda_second_unit: unit.lambda_second,
        lambda_second_optimized: opt.lambda_second,
        empirical_gap,
    })
}

/// Worker pool capped by `ADMM_TUNER_THREADS` when set.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("ADMM_TUNER_THREADS") {
        let k: usize = v.parse().map_err(|_| Error::Config(format!("ADMM_TUNER_THREADS={v} is not a count")))?;
        b = b.num_threads(k.max(1));
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

pub fn run_consensus_mc(cfg: &ExperimentConfig) -> Result<McReport> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.epsilons.len()).flat_map(move |ei| (0..cfg.trials).map(move |t| (n, ei, t))))
        .collect();
    let instances: Vec<McInstance> = worker_pool()?
        .install(|| tasks.par_iter().map(|&(n, ei, t)| mc_instance(cfg, n, ei, t)).collect::<Result<_>>())?;

    let mean = |v: &[&McInstance], f: fn(&McInstance) -> f64| v.iter().map(|i| f(i)).sum::<f64>() / v.len() as f64;
    let mut rows = Vec::new();
    for chunk in instances.chunks(cfg.trials) {
        let v: Vec<&McInstance> = chunk.iter().collect();
        rows.push(McRow {
            n: v[0].n,
            epsilon: v[0].epsilon,
            trials: v.len(),
            mean_factor_untuned: mean(&v, |i| i.factor_untuned),
            mean_factor_unit_weights: mean(&v, |i| i.factor_unit_weights),
            mean_factor_optimized: mean(&v, |i| i.factor_optimized),
            mean_lambda2_unit: mean(&v, |i| i.lambda_second_unit),
            mean_lambda2_optimized: mean(&v, |i| i.lambda_second_optimized),
            max_empirical_gap: v.iter().filter_map(|i| i.empirical_gap).fold(0.0, f64::max),
        });
    }

    let worse: Vec<_> =
        instances.iter().filter(|i| i.factor_optimized > i.factor_unit_weights + 1e-9).map(|i| (i.n, i.trial)).collect();
    let below: Vec<_> = instances.iter().filter(|i| i.factor_optimized < 0.5 - 1e-12).map(|i| (i.n, i.trial)).collect();
    let nonmonotone: Vec<_> = rows
        .iter()
        .filter(|r| !(r.mean_factor_untuned >= r.mean_factor_unit_weights && r.mean_factor_unit_weights >= r.mean_factor_optimized))
        .map(|r| (r.n, r.epsilon))
        .collect();
    let gap = rows.iter().map(|r| r.max_empirical_gap).fold(0.0, f64::max);
    let checks = vec![
        Check::new("optimized_not_worse", worse.is_empty(), format!("violations {worse:?}")),
        Check::new("lower_bound", below.is_empty(), format!("violations {below:?}")),
        Check::new("monotone_means", nonmonotone.is_empty(), format!("violations {nonmonotone:?}")),
        Check::new("empirical_spot_checks", gap <= FACTOR_AGREEMENT, format!("max gap {gap:.2e}")),
    ];
    Ok(McReport { rows, checks, instances })
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleReport {
    pub qhat: Vec<f64>,
    pub qlin: Vec<f64>,
    pub shared_optimum: f64,
    pub plan: PlanFile,
    pub unit_weights: PlanFile,
    pub run: RunSummary,
    pub checks: Vec<Check>,
}

/// Consensus problem from an optional problem file; average consensus otherwise.
fn load_consensus(cfg: &ExperimentConfig, n: usize) -> Result<ConsensusQp> {
    let Some(path) = &cfg.problem else {
        return ConsensusQp::average(n, 1.0);
    };
    let (p, file_alphas) = read_problem(path)?;
    if p.agent_count() != n {
        return Err(Error::Dimension(format!("problem has {} agents, graph has {n} nodes", p.agent_count())));
    }
    let alphas = choose_alphas(&p, file_alphas, cfg)?;
    reduce_to_consensus(&p, &alphas)
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<SingleReport> {
    let path = cfg.graph.as_ref().ok_or_else(|| Error::Config("single-run needs --graph".into()))?;
    let g = read_graph(path)?;
    if !g.is_connected(true) {
        return Err(Error::Disconnected);
    }
    let c = load_consensus(cfg, g.node_count())?;
    let (mut plan, _) = optimal_scaling_pipeline(&c, &g, &cfg.weight_options())?;
    if let Some(rho) = cfg.rho {
        plan.rho_star = rho;
    }
    let unit = ScalingPlan::for_weights(&c, &g)?;

    let mut rng = GraphRng::seed_from_u64(cfg.seed);
    let xbar = shared_optimum(&c);
    let x0: Vec<f64> = (0..g.node_count()).map(|_| xbar + rng.random_range(-1.0..1.0)).collect();
    let run = scaled_run(&c, &plan, &g, &x0)?;
    let checks = vec![
        Check::new("lower_bound", run.predicted_factor >= 0.5 - 1e-12, format!("{}", run.predicted_factor)),
        Check::factors("predicted_vs_empirical", run.predicted_factor, run.empirical_factor),
    ];
    Ok(SingleReport {
        qhat: c.qhat.clone(),
        qlin: c.qlin.clone(),
        shared_optimum: xbar,
        plan: plan.to_file(),
        unit_weights: unit.to_file(),
        run,
        checks,
    })
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
