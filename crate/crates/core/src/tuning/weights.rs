//! Edge-weight optimization minimizing the second-largest pencil eigenvalue.
//!
//! The problem is quasi-convex in `(w, λ)`: for a fixed `λ` the constraints
//! `Pᵀ(A − λD)P ≺ 0`, `A − D − 𝟏𝟏ᵀ ≺ 0` and `D ≻ εI` are LMIs in the weights. We bisect on
//! `λ` and decide each probe by driving
//!
//! ```text
//! g(w) = max{ λ_max(Pᵀ(A(w) − λD(w))P), λ_max(A(w) − D(w) − 𝟏𝟏ᵀ), ε − min_i D_ii(w) }
//! ```
//! below zero with projected subgradient steps. The first two terms change sign only with
//! the direction of `w`, so iterates live on the slice `Σ w_e = n/2` (`𝟏ᵀD𝟏 = n`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{complement_basis, ones_complement_basis, pencil_eigenvalues, sym_eig, tol, DenseMatrix};

#[derive(Debug, Clone)]
pub struct WeightOptOptions {
    /// Lower bound on every weighted degree; `None` uses `1e-3 · n/m`.
    pub eps: Option<f64>,
    /// Bisection stops when the bracket on `λ` is narrower than this.
    pub tol: f64,
    /// Subgradient steps per feasibility probe.
    pub steps: usize,
    /// Step length at step `t` is `step_scale · w̄ / √t`, `w̄` the uniform weight.
    pub step_scale: f64,
}

impl Default for WeightOptOptions {
    fn default() -> Self {
        Self { eps: None, tol: 1e-5, steps: 500, step_scale: 1.0 }
    }
}

/// One probe of the bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionProbe {
    pub lambda: f64,
    pub feasible: bool,
    /// Smallest `g(w)` seen while probing.
    pub certificate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightOptResult {
    /// Per-edge weights in canonical edge order, normalized to `𝟏ᵀD𝟏 = n`.
    pub weights: Vec<f64>,
    /// `λ_{n−1}` of the pencil at `weights`.
    pub lambda_second_star: f64,
    pub bisection_history: Vec<BisectionProbe>,
}

impl WeightOptResult {
    pub fn graph(&self, topology: &WeightedGraph) -> Result<WeightedGraph> {
        topology.with_weights(&self.weights)
    }
}

/// `λ_max(Pᵀ(A − λD)P)` with `P` an orthonormal basis of `𝟏⊥`.
///
/// Negative values imply `λ > λ_{n−1}`. The converse holds when all degrees are equal;
/// otherwise the sign changes at the top eigenvalue of `(PᵀAP, PᵀDP)`, which can sit
/// above `λ_{n−1}`.
pub fn complement_predicate(g: &WeightedGraph, lambda: f64) -> Result<f64> {
    restricted_top(g, lambda, &ones_complement_basis(g.node_count()))
}

/// `λ_max(Pᵀ(A − λD)P)` with `P` an orthonormal basis of `(D𝟏)⊥`: negative exactly when
/// `λ > λ_{n−1}` for a connected graph. Not an LMI in the weights, since `P` depends on them.
pub fn degree_complement_predicate(g: &WeightedGraph, lambda: f64) -> Result<f64> {
    restricted_top(g, lambda, &complement_basis(&g.degrees()))
}

fn restricted_top(g: &WeightedGraph, lambda: f64, p: &DenseMatrix) -> Result<f64> {
    let m = g.adjacency().sub(&g.degree_matrix().scale(lambda));
    Ok(sym_eig(&p.transpose().matmul(&m).matmul(p).symmetrized())?.max())
}

/// `λ_max(A − D − 𝟏𝟏ᵀ)`: zero or above when the positive-weight edges leave the graph
/// disconnected, negative otherwise.
pub fn connectivity_lmi(g: &WeightedGraph) -> Result<f64> {
    Ok(sym_eig(&connectivity_matrix(g))?.max())
}

/// Connectivity decided by the sign of [`connectivity_lmi`], with rounding-level values
/// counted as zero.
pub fn lmi_certifies_connected(g: &WeightedGraph) -> Result<bool> {
    let m = connectivity_matrix(g);
    let scale = m.norm_fro().max(1.0);
    Ok(sym_eig(&m)?.max() < -tol::DEFINITENESS * scale)
}

fn connectivity_matrix(g: &WeightedGraph) -> DenseMatrix {
    let n = g.node_count();
    g.adjacency().sub(&g.degree_matrix()).sub(&DenseMatrix::from_fn(n, n, |_, _| 1.0))
}

/// Pencil `λ_{n−1}` of a weight vector on `topology`, or `None` when some degree vanishes.
fn second_eigenvalue(topology: &WeightedGraph, w: &[f64]) -> Option<f64> {
    let g = topology.with_weights(w).ok()?;
    if g.degrees().iter().any(|d| !(*d > 0.0)) {
        return None;
    }
    let l = pencil_eigenvalues(&g.adjacency(), &g.degree_matrix()).ok()?;
    Some(l[l.len() - 2])
}

struct Problem<'a> {
    topology: &'a WeightedGraph,
    basis: DenseMatrix,
    eps: f64,
    total: f64,
}

impl Problem<'_> {
    /// `(g(w), subgradient)`.
    fn evaluate(&self, w: &[f64], lambda: f64) -> Result<(f64, Vec<f64>)> {
        let g = self.topology.with_weights(w)?;
        let edges = g.edges();
        let n = g.node_count();
        let p = &self.basis;

        let m = g.adjacency().sub(&g.degree_matrix().scale(lambda));
        let eig = sym_eig(&p.transpose().matmul(&m).matmul(p).symmetrized())?;
        let top = eig.max();
        let y = p.matvec(&eig.eigenvector(eig.eigenvalues.len() - 1));
        let mut value = top;
        let mut grad: Vec<f64> =
            edges.iter().map(|e| 2.0 * y[e.i] * y[e.j] - lambda * (y[e.i] * y[e.i] + y[e.j] * y[e.j])).collect();

        let deg = g.degrees();
        let (kmin, dmin) = deg.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &d)| if d < acc.1 { (i, d) } else { acc });
        if self.eps - dmin > value {
            value = self.eps - dmin;
            grad = edges.iter().map(|e| if e.i == kmin || e.j == kmin { -1.0 } else { 0.0 }).collect();
        }

        // A − D − 𝟏𝟏ᵀ is negative definite whenever the support is connected, so its
        // eigenvalue only matters when it could be the largest term.
        if value < 0.0 || !g.is_connected(true) {
            let eig = sym_eig(&connectivity_matrix(&g))?;
            if eig.max() > value {
                value = eig.max();
                let y = eig.eigenvector(n - 1);
                grad = edges.iter().map(|e| -(y[e.i] - y[e.j]).powi(2)).collect();
            }
        }
        Ok((value, grad))
    }
}

/// Euclidean projection onto `{w ≥ 0, Σ w = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - total) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Bisection over `λ` with a subgradient feasibility oracle for each probe.
///
/// The uniform weighting seeds the search, so the result is never worse than it.
pub fn optimize_weights(topology: &WeightedGraph, opts: &WeightOptOptions) -> Result<WeightOptResult> {
    let n = topology.node_count();
    let m = topology.edge_count();
    if n < 2 || m == 0 || !topology.is_connected(false) {
        return Err(Error::InfeasibleTopology);
    }
    let total = n as f64 / 2.0;
    let uniform = total / m as f64;
    let problem = Problem {
        topology,
        basis: ones_complement_basis(n),
        eps: opts.eps.unwrap_or(1e-3 * n as f64 / m as f64),
        total,
    };

    let mut best_w = vec![uniform; m];
    let mut best_lambda = second_eigenvalue(topology, &best_w).ok_or(Error::InfeasibleTopology)?;
    let mut history = Vec::new();
    let mut lo = -1.0 + 1e-9;

    while best_lambda - lo > opts.tol {
        let probe = 0.5 * (lo + best_lambda);
        let mut w = best_w.clone();
        let mut certificate = f64::INFINITY;
        let mut feasible = false;
        for t in 1..=opts.steps {
            let (value, grad) = problem.evaluate(&w, probe)?;
            certificate = certificate.min(value);
            if value < 0.0 {
                if let Some(l) = second_eigenvalue(topology, &w) {
                    if l < best_lambda {
                        best_lambda = l;
                        best_w = w.clone();
                    }
                    feasible = true;
                    break;
                }
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = opts.step_scale * uniform / (t as f64).sqrt() / norm;
            let moved: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - step * gi).collect();
            w = project_simplex(&moved, problem.total);
        }
        history.push(BisectionProbe { lambda: probe, feasible, certificate });
        if !feasible {
            lo = probe;
        }
    }

    Ok(WeightOptResult { weights: best_w, lambda_second_star: best_lambda, bisection_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 2.0], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(p, vec![0.0, 0.0, 1.0]);
        let p = project_simplex(&[0.2, 0.3], 1.0);
        assert!((p[0] - 0.45).abs() < 1e-15 && (p[1] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn infeasible_topology() {
        let split = WeightedGraph::unweighted(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(optimize_weights(&split, &WeightOptOptions::default()), Err(Error::InfeasibleTopology)));
    }

    #[test]
    fn single_edge_reaches_minus_one() {
        let r = optimize_weights(&WeightedGraph::path(2), &WeightOptOptions::default()).unwrap();
        assert!((r.lambda_second_star + 1.0).abs() < 1e-5);
    }

    #[test]
    fn normalization() {
        let r = optimize_weights(&WeightedGraph::path(4), &WeightOptOptions::default()).unwrap();
        assert!((2.0 * r.weights.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }
}
