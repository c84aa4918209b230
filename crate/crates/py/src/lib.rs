//! Python bindings for `optscale`.

use optscale::experiments::{self, ExperimentConfig, Mode};
use optscale::io::ProblemFile;
use optscale::qp::{self, AlphaSplit};
use optscale::tuning::{self, WeightOptOptions};
use optscale::{ConsensusQp, ScalingPlan, WeightedGraph};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: optscale::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Weighted undirected graph with canonical edge order.
#[pyclass(name = "Graph", module = "optscale_py", frozen)]
pub struct PyGraph {
    inner: WeightedGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        Ok(Self { inner: WeightedGraph::new(n, edges).map_err(py_err)? })
    }

    #[staticmethod]
    fn path(n: usize) -> Self {
        Self { inner: WeightedGraph::path(n) }
    }

    #[staticmethod]
    fn complete(n: usize) -> Self {
        Self { inner: WeightedGraph::complete(n) }
    }

    /// Connected Erdős–Rényi sample with unit weights; returns the graph and the attempts used.
    #[staticmethod]
    #[pyo3(signature = (n, epsilon, seed, max_attempts = 1000))]
    fn erdos_renyi(n: usize, epsilon: f64, seed: u64, max_attempts: usize) -> PyResult<(Self, usize)> {
        let (g, attempts) = optscale::graph::connected_erdos_renyi(n, epsilon, seed, max_attempts).map_err(py_err)?;
        Ok((Self { inner: g }, attempts))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.i, e.j, e.w)).collect()
    }

    fn degrees(&self) -> Vec<f64> {
        self.inner.degrees()
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected(true)
    }

    /// Ascending eigenvalues of the pencil `(A, D)`.
    fn pencil_eigenvalues(&self) -> PyResult<Vec<f64>> {
        optscale::linalg::pencil_eigenvalues(&self.inner.adjacency(), &self.inner.degree_matrix()).map_err(py_err)
    }

    fn with_weights(&self, weights: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_weights(&weights).map_err(py_err)? })
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// Tuned weights, step-size and curvature substitution for a consensus problem.
#[pyclass(name = "Plan", module = "optscale_py", frozen, get_all)]
pub struct PyPlan {
    weights: Vec<f64>,
    degree: Vec<f64>,
    kappa: f64,
    rho: f64,
    phi: f64,
    lambda2: f64,
    q_transformed: Vec<f64>,
}

impl From<ScalingPlan> for PyPlan {
    fn from(p: ScalingPlan) -> Self {
        Self {
            weights: p.weights,
            degree: p.degree,
            kappa: p.kappa,
            rho: p.rho_star,
            phi: p.phi_star,
            lambda2: p.lambda_second,
            q_transformed: p.q_transformed,
        }
    }
}

#[pymethods]
impl PyPlan {
    fn __repr__(&self) -> String {
        format!("Plan(lambda2={:.6}, kappa={:.6}, rho={:.6}, phi={:.6})", self.lambda2, self.kappa, self.rho, self.phi)
    }
}

fn consensus(qhat: Vec<f64>, qlin: Vec<f64>) -> PyResult<ConsensusQp> {
    ConsensusQp::new(qhat, qlin).map_err(py_err)
}

fn weight_options(eps: Option<f64>) -> WeightOptOptions {
    WeightOptOptions { eps, ..WeightOptOptions::default() }
}

/// Weights minimizing `λ_{n−1}`; returns `(weights, lambda2)`.
#[pyfunction]
#[pyo3(signature = (graph, eps = None))]
fn optimize_weights(graph: &PyGraph, eps: Option<f64>) -> PyResult<(Vec<f64>, f64)> {
    let r = tuning::optimize_weights(&graph.inner, &weight_options(eps)).map_err(py_err)?;
    Ok((r.weights, r.lambda_second_star))
}

#[pyfunction]
fn optimal_rho(lambda2: f64, kappa: f64) -> f64 {
    tuning::optimal_rho(lambda2, kappa)
}

#[pyfunction]
fn predicted_factor(lambda2: f64) -> f64 {
    tuning::predicted_factor(lambda2)
}

/// Second-largest iteration-matrix modulus at step-size `rho`.
#[pyfunction]
fn convergence_factor(graph: &PyGraph, kappa: f64, rho: f64) -> PyResult<f64> {
    let s = tuning::SpectralSummary::from_graph(&graph.inner, kappa).map_err(py_err)?;
    Ok(tuning::second_largest_magnitude(rho, kappa, &s))
}

/// Full tuning: optimized weights, `κ`, `ρ*` and the transformed curvatures.
#[pyfunction]
#[pyo3(signature = (qhat, qlin, graph, eps = None))]
fn scaling_plan(qhat: Vec<f64>, qlin: Vec<f64>, graph: &PyGraph, eps: Option<f64>) -> PyResult<PyPlan> {
    let c = consensus(qhat, qlin)?;
    let (plan, _) = tuning::optimal_scaling_pipeline(&c, &graph.inner, &weight_options(eps)).map_err(py_err)?;
    Ok(plan.into())
}

/// Plan that keeps the graph's weights and tunes only `κ` and `ρ`.
#[pyfunction]
fn plan_for_weights(qhat: Vec<f64>, qlin: Vec<f64>, graph: &PyGraph) -> PyResult<PyPlan> {
    let c = consensus(qhat, qlin)?;
    Ok(ScalingPlan::for_weights(&c, &graph.inner).map_err(py_err)?.into())
}

/// Reduces an arrowhead QP given as JSON text (the `--problem` file format).
/// Returns `(qhat, qlin, alphas)`; shares are allocated when neither argument nor file gives them.
#[pyfunction]
#[pyo3(signature = (problem_json, alphas = None))]
fn reduce_problem(problem_json: &str, alphas: Option<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let file: ProblemFile = serde_json::from_str(problem_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let (p, file_alphas) = file.to_problem().map_err(py_err)?;
    let split = match (alphas, file_alphas) {
        (Some(a), _) => AlphaSplit::new(a).map_err(py_err)?,
        (None, Some(a)) => a,
        (None, None) => qp::allocate_alphas(&p).map_err(py_err)?,
    };
    let c = qp::reduce_to_consensus(&p, &split).map_err(py_err)?;
    Ok((c.qhat, c.qlin, split.as_slice().to_vec()))
}

/// Consensus optimum `−Σq̂ / ΣQ̂`.
#[pyfunction]
fn shared_optimum(qhat: Vec<f64>, qlin: Vec<f64>) -> PyResult<f64> {
    Ok(qp::shared_optimum(&consensus(qhat, qlin)?))
}

/// Runs the message-passing protocol; returns one iterate per round, round 0 first.
#[pyfunction]
fn run_protocol(
    qhat: Vec<f64>,
    qlin: Vec<f64>,
    graph: &PyGraph,
    rho: f64,
    x0: Vec<f64>,
    rounds: usize,
) -> PyResult<Vec<Vec<f64>>> {
    let c = consensus(qhat, qlin)?;
    let t = optscale::simnet::run_protocol(&c, &graph.inner, rho, &x0, rounds).map_err(py_err)?;
    Ok(t.iterates())
}

/// Bundled worked example as a JSON report string.
#[pyfunction]
fn dqp_example() -> PyResult<String> {
    let report = experiments::run_dqp_example(&ExperimentConfig::new(Mode::DqpExample)).map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn optscale_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(optimize_weights, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_rho, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_factor, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_factor, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_plan, m)?)?;
    m.add_function(wrap_pyfunction!(plan_for_weights, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_problem, m)?)?;
    m.add_function(wrap_pyfunction!(shared_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(dqp_example, m)?)?;
    Ok(())
}
