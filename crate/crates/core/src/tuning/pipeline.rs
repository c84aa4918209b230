use serde::{Deserialize, Serialize};

use super::formulas::{kappa_for, optimal_rho, predicted_factor, SpectralSummary};
use super::weights::{optimize_weights, WeightOptOptions, WeightOptResult};
use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::qp::ConsensusQp;

/// Edge weights, step-size and the curvature substitution `Q ← D/κ` for one consensus problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPlan {
    pub weights: Vec<f64>,
    pub degree: Vec<f64>,
    pub kappa: f64,
    pub rho_star: f64,
    pub phi_star: f64,
    pub lambda_second: f64,
    /// Diagonal of `D/κ`, used in place of the original curvatures.
    pub q_transformed: Vec<f64>,
}

/// Wire form of a plan: `{"weights", "lambda2", "kappa", "rho", "phi"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub weights: Vec<f64>,
    pub lambda2: f64,
    pub kappa: f64,
    pub rho: f64,
    pub phi: f64,
}

impl ScalingPlan {
    /// Plan for fixed weights: only `κ` and `ρ` are tuned.
    pub fn for_weights(c: &ConsensusQp, g: &WeightedGraph) -> Result<Self> {
        let degree = g.degrees();
        let kappa = kappa_for(&degree, &c.qhat);
        let summary = SpectralSummary::from_graph(g, kappa)?;
        Ok(Self::assemble(g.weights(), degree, kappa, summary.lambda_second))
    }

    fn assemble(weights: Vec<f64>, degree: Vec<f64>, kappa: f64, lambda_second: f64) -> Self {
        let q_transformed = degree.iter().map(|d| d / kappa).collect();
        Self {
            weights,
            degree,
            kappa,
            rho_star: optimal_rho(lambda_second, kappa),
            phi_star: predicted_factor(lambda_second),
            lambda_second,
            q_transformed,
        }
    }

    pub fn graph(&self, topology: &WeightedGraph) -> Result<WeightedGraph> {
        topology.with_weights(&self.weights)
    }

    pub fn summary(&self, topology: &WeightedGraph) -> Result<SpectralSummary> {
        SpectralSummary::from_graph(&self.graph(topology)?, self.kappa)
    }

    pub fn to_file(&self) -> PlanFile {
        PlanFile {
            weights: self.weights.clone(),
            lambda2: self.lambda_second,
            kappa: self.kappa,
            rho: self.rho_star,
            phi: self.phi_star,
        }
    }
}

/// Optimal network-constrained scaling:
/// optimize the weights, take `κ` from the resulting degrees, then the step-size.
pub fn optimal_scaling_pipeline(
    c: &ConsensusQp,
    topology: &WeightedGraph,
    opts: &WeightOptOptions,
) -> Result<(ScalingPlan, WeightOptResult)> {
    let opt = optimize_weights(topology, opts)?;
    let g = opt.graph(topology)?;
    let degree = g.degrees();
    let kappa = kappa_for(&degree, &c.qhat);
    let plan = ScalingPlan::assemble(opt.weights.clone(), degree, kappa, opt.lambda_second_star);
    Ok((plan, opt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_negative_branch() {
        let c = ConsensusQp::average(3, 1.0).unwrap();
        let (plan, _) = optimal_scaling_pipeline(&c, &WeightedGraph::complete(3), &WeightOptOptions::default()).unwrap();
        assert_eq!(plan.phi_star, 0.5);
        assert!((plan.rho_star - 1.0 / plan.kappa).abs() < 1e-15);
    }

    #[test]
    fn plan_file_field_names() {
        let c = ConsensusQp::average(2, 1.0).unwrap();
        let plan = ScalingPlan::for_weights(&c, &WeightedGraph::path(2)).unwrap();
        let json = serde_json::to_value(plan.to_file()).unwrap();
        for key in ["weights", "lambda2", "kappa", "rho", "phi"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}
