use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{pencil_eigenvalues, tol};
use crate::scaled_admm::{f_rho, phi_magnitude};

/// Pencil spectrum of `(A, D)` for a connected weighted graph, plus the `κ` in use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Ascending; the last entry is 1.
    pub lambdas: Vec<f64>,
    pub lambda_second: f64,
    pub kappa: f64,
}

impl SpectralSummary {
    pub fn new(lambdas: Vec<f64>, kappa: f64) -> Result<Self> {
        let n = lambdas.len();
        if n < 2 {
            return Err(Error::Dimension("spectral summary needs at least two eigenvalues".into()));
        }
        if !(kappa > 0.0) {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        let top = lambdas[n - 1];
        if (top - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGraph(format!("largest pencil eigenvalue is {top}, expected 1")));
        }
        if let Some(l) = lambdas.iter().find(|l| **l < -1.0 - tol::PENCIL_BOUND || **l > 1.0 + tol::PENCIL_BOUND) {
            return Err(Error::InvalidGraph(format!("pencil eigenvalue {l} outside [-1, 1]")));
        }
        let lambda_second = lambdas[n - 2];
        if lambda_second >= 1.0 - 1e-9 {
            return Err(Error::Disconnected);
        }
        Ok(Self { lambdas, lambda_second, kappa })
    }

    /// Pencil spectrum of the graph's adjacency and degree matrices.
    pub fn from_graph(g: &WeightedGraph, kappa: f64) -> Result<Self> {
        if !g.is_connected(true) {
            return Err(Error::Disconnected);
        }
        Self::new(pencil_eigenvalues(&g.adjacency(), &g.degree_matrix())?, kappa)
    }

    /// Pencil eigenvalues strictly below the top one.
    pub fn lower(&self) -> &[f64] {
        &self.lambdas[..self.lambdas.len() - 1]
    }
}

/// `κ = 𝟏ᵀD𝟏 / 𝟏ᵀQ𝟏`, so that replacing `Q` with `D/κ` keeps the consensus optimum.
pub fn kappa_for(degree: &[f64], qdiag: &[f64]) -> f64 {
    degree.iter().sum::<f64>() / qdiag.iter().sum::<f64>()
}

/// Step-size minimizing the convergence factor for a given `λ_{n−1}` and `κ`.
pub fn optimal_rho(lambda_second: f64, kappa: f64) -> f64 {
    if lambda_second >= 0.0 {
        1.0 / (kappa * (1.0 - lambda_second * lambda_second).sqrt())
    } else {
        1.0 / kappa
    }
}

/// Convergence factor reached at the optimal step-size; never below one half.
pub fn predicted_factor(lambda_second: f64) -> f64 {
    if lambda_second >= 0.0 {
        0.5 * (1.0 + lambda_second / (1.0 + (1.0 - lambda_second * lambda_second).sqrt()))
    } else {
        0.5
    }
}

/// Second-largest eigenvalue modulus of the iteration matrix:
/// `max{ max_{i<n} |φ(ρ, λ_i)|, ρκ/(1+ρκ) }`.
pub fn second_largest_magnitude(rho: f64, kappa: f64, s: &SpectralSummary) -> f64 {
    s.lower().iter().map(|&l| phi_magnitude(rho, kappa, l)).fold(f_rho(rho, kappa), f64::max)
}

/// Pencil value maximizing `|φ(ρ, ·)|` over `{λ_1, λ_{n−1}}`; ties go to `λ_{n−1}`.
pub fn worst_lambda(rho: f64, kappa: f64, s: &SpectralSummary) -> f64 {
    let (l1, l2) = (s.lambdas[0], s.lambda_second);
    if phi_magnitude(rho, kappa, l1) > phi_magnitude(rho, kappa, l2) + 1e-12 {
        l1
    } else {
        l2
    }
}
