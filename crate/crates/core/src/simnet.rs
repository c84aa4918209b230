//! Synchronous message-passing execution of edge-variable consensus ADMM.
//!
//! Every node owns its local copy `x_i`, its curvature and linear term, and one dual per
//! incident edge. A round is:
//!
//! 1. local x-update `x_i ← (Q̂_i + ρ d_i)⁻¹(−q̂_i + ρ Σ_e w_e (z_e − u_{e,i}))`,
//! 2. every node sends `x_i` to each neighbor (2m messages),
//! 3. after the barrier both endpoints of an edge compute `z_e = ½(x_i + x_j)` and update
//!    their dual `u_{e,i} ← u_{e,i} + x_i − z_e`.
//!
//! Reads only ever touch the previous barrier's published messages, so node updates inside a
//! round are independent. The iteration is the synchronous linear recursion; no asynchrony.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{build_matrices, WeightedGraph};
use crate::linalg::{self, norm_inf};
use crate::qp::{shared_optimum, ConsensusQp};
use crate::scaled_admm::iteration_matrix;

#[derive(Debug, Clone)]
struct Port {
    edge: usize,
    neighbor: usize,
    weight: f64,
    z: f64,
    dual: f64,
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: usize,
    pub x: f64,
    pub qhat: f64,
    pub qlin: f64,
    pub degree: f64,
    ports: Vec<Port>,
}

impl AgentState {
    /// `(edge index, dual)` pairs in canonical edge order.
    pub fn duals(&self) -> Vec<(usize, f64)> {
        self.ports.iter().map(|p| (p.edge, p.dual)).collect()
    }

    fn x_update(&self, rho: f64) -> f64 {
        let pull: f64 = self.ports.iter().map(|p| p.weight * (p.z - p.dual)).sum();
        (-self.qlin + rho * pull) / (self.qhat + rho * self.degree)
    }

    /// Edge updates from the neighbors' published values.
    fn absorb(&mut self, published: &[f64], initial: bool) {
        let x = self.x;
        for p in &mut self.ports {
            p.z = 0.5 * (x + published[p.neighbor]);
            if !initial {
                p.dual += x - p.z;
            }
        }
    }
}

/// A value sent from one node to a neighbor at a given round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub round: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    pub messages: usize,
    pub x: Vec<f64>,
    /// `max_i |x_i − x̄|`.
    pub max_dev: f64,
    /// `max_e |u_{e,i} + u_{e,j}|`.
    pub dual_gap: f64,
}

#[derive(Debug, Clone)]
pub struct ProtocolTrace {
    /// Round 0 is the initial exchange of `x⁰`.
    pub rounds: Vec<RoundLog>,
    pub ledger: Vec<Message>,
    pub optimum: f64,
}

impl ProtocolTrace {
    pub fn iterates(&self) -> Vec<Vec<f64>> {
        self.rounds.iter().map(|r| r.x.clone()).collect()
    }

    /// True iff every message in the ledger travelled along an edge of `g`.
    pub fn is_local(&self, g: &WeightedGraph) -> bool {
        let nb = g.neighbors();
        self.ledger.iter().all(|m| nb[m.from].contains(&m.to))
    }
}

/// Synchronous simulator; edges with zero weight carry no traffic.
#[derive(Debug, Clone)]
pub struct Network {
    agents: Vec<AgentState>,
    rho: f64,
    optimum: f64,
}

impl Network {
    pub fn new(c: &ConsensusQp, g: &WeightedGraph, rho: f64) -> Result<Self> {
        if c.node_count() != g.node_count() {
            return Err(Error::Dimension(format!("{} local objectives for {} nodes", c.node_count(), g.node_count())));
        }
        if !g.is_connected(true) {
            return Err(Error::Disconnected);
        }
        if let Some((index, &value)) = c.qhat.iter().enumerate().find(|(_, q)| !(**q > 0.0)) {
            return Err(Error::NonConvexLocal { index, value });
        }
        if !(rho > 0.0) {
            return Err(Error::Config(format!("step-size must be positive, got {rho}")));
        }
        let mut agents: Vec<AgentState> = (0..g.node_count())
            .map(|id| AgentState { id, x: 0.0, qhat: c.qhat[id], qlin: c.qlin[id], degree: 0.0, ports: Vec::new() })
            .collect();
        for (k, e) in g.edges().iter().enumerate().filter(|(_, e)| e.w > 0.0) {
            for (me, other) in [(e.i, e.j), (e.j, e.i)] {
                agents[me].ports.push(Port { edge: k, neighbor: other, weight: e.w, z: 0.0, dual: 0.0 });
                agents[me].degree += e.w;
            }
        }
        Ok(Self { agents, rho, optimum: shared_optimum(c) })
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    fn publish(&self, round: usize, ledger: &mut Vec<Message>) -> (Vec<f64>, usize) {
        let published: Vec<f64> = self.agents.iter().map(|a| a.x).collect();
        let before = ledger.len();
        for a in &self.agents {
            for p in &a.ports {
                ledger.push(Message { round, from: a.id, to: p.neighbor });
            }
        }
        (published, ledger.len() - before)
    }

    fn log(&self, round: usize, messages: usize) -> RoundLog {
        let x: Vec<f64> = self.agents.iter().map(|a| a.x).collect();
        let max_dev = x.iter().map(|v| (v - self.optimum).abs()).fold(0.0, f64::max);
        let mut duals = std::collections::BTreeMap::<usize, f64>::new();
        for a in &self.agents {
            for p in &a.ports {
                *duals.entry(p.edge).or_default() += p.dual;
            }
        }
        let dual_gap = duals.values().fold(0.0, |m: f64, v| m.max(v.abs()));
        RoundLog { round, messages, x, max_dev, dual_gap }
    }

    /// Runs `rounds` protocol rounds from `x0` with zero duals and `z⁰_e = ½(x⁰_i + x⁰_j)`.
    pub fn run(&mut self, x0: &[f64], rounds: usize) -> Result<ProtocolTrace> {
        if x0.len() != self.agents.len() {
            return Err(Error::Dimension(format!("{} initial values for {} nodes", x0.len(), self.agents.len())));
        }
        let mut ledger = Vec::new();
        for (a, &x) in self.agents.iter_mut().zip(x0) {
            a.x = x;
            a.ports.iter_mut().for_each(|p| p.dual = 0.0);
        }
        let (published, sent) = self.publish(0, &mut ledger);
        self.agents.par_iter_mut().for_each(|a| a.absorb(&published, true));
        let mut logs = vec![self.log(0, sent)];

        for round in 1..=rounds {
            let rho = self.rho;
            self.agents.par_iter_mut().for_each(|a| a.x = a.x_update(rho));
            let (published, sent) = self.publish(round, &mut ledger);
            self.agents.par_iter_mut().for_each(|a| a.absorb(&published, false));
            logs.push(self.log(round, sent));
        }
        Ok(ProtocolTrace { rounds: logs, ledger, optimum: self.optimum })
    }
}

pub fn run_protocol(c: &ConsensusQp, g: &WeightedGraph, rho: f64, x0: &[f64], rounds: usize) -> Result<ProtocolTrace> {
    Network::new(c, g, rho)?.run(x0, rounds)
}

/// Centralized reference: first ADMM step in closed form, then the iteration-matrix recursion.
///
/// `x¹ = (Q + ρD)⁻¹(−q + (ρ/2)(D + A)x⁰)`, `x^{k+1} = M11 x^k + M12 x^{k−1}`.
pub fn matrix_trace(c: &ConsensusQp, g: &WeightedGraph, rho: f64, x0: &[f64], rounds: usize) -> Result<Vec<Vec<f64>>> {
    let gm = build_matrices(g);
    let im = iteration_matrix(rho, &gm, &c.qhat)?;
    let deg = gm.degree.diag();
    let pull = gm.adjacency.add(&gm.degree).matvec(x0);
    let x1: Vec<f64> = (0..x0.len())
        .map(|i| (-c.qlin[i] + 0.5 * rho * pull[i]) / (c.qhat[i] + rho * deg[i]))
        .collect();
    let mut xs = im.recursion(&x1, x0, rounds.saturating_sub(1));
    xs.truncate(rounds + 1);
    Ok(xs)
}

/// Per-round `‖x_protocol − x_matrix‖∞`.
pub fn equivalence_check(protocol: &[Vec<f64>], matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    if protocol.len() != matrix.len() {
        return Err(Error::LengthMismatch(protocol.len(), matrix.len()));
    }
    Ok(protocol.iter().zip(matrix).map(|(a, b)| norm_inf(&linalg::sub(a, b))).collect())
}

pub fn equivalent(deviations: &[f64]) -> bool {
    deviations.iter().all(|d| *d <= linalg::tol::EQUIVALENCE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_is_stationary() {
        // every local optimum sits at 3, so zero duals are already optimal
        let c = ConsensusQp::new(vec![1.0, 2.0, 0.5], vec![-3.0, -6.0, -1.5]).unwrap();
        let xbar = shared_optimum(&c);
        let t = run_protocol(&c, &WeightedGraph::path(3), 0.8, &[xbar; 3], 30).unwrap();
        for r in &t.rounds {
            assert!(r.max_dev < 1e-14, "round {} drifted by {}", r.round, r.max_dev);
        }
    }

    #[test]
    fn message_count_and_locality() {
        let g = WeightedGraph::complete(4);
        let c = ConsensusQp::average(4, 1.0).unwrap();
        let t = run_protocol(&c, &g, 1.0, &[1.0, 2.0, 3.0, 4.0], 5).unwrap();
        assert!(t.rounds.iter().all(|r| r.messages == 2 * g.edge_count()));
        assert!(t.is_local(&g));
        assert!(!t.is_local(&WeightedGraph::path(4)));
    }

    #[test]
    fn disconnected_and_nonconvex() {
        let split = WeightedGraph::unweighted(4, [(0, 1), (2, 3)]).unwrap();
        let c = ConsensusQp::average(4, 1.0).unwrap();
        assert!(matches!(run_protocol(&c, &split, 1.0, &[0.0; 4], 3), Err(Error::Disconnected)));
        let mut bad = ConsensusQp::average(2, 1.0).unwrap();
        bad.qhat[1] = -1.0;
        assert!(matches!(
            run_protocol(&bad, &WeightedGraph::path(2), 1.0, &[0.0; 2], 3),
            Err(Error::NonConvexLocal { index: 1, .. })
        ));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(equivalence_check(&[vec![0.0]], &[]), Err(Error::LengthMismatch(1, 0))));
    }

    #[test]
    fn perturbed_step_size_diverges_from_reference() {
        let g = WeightedGraph::path(4);
        let c = ConsensusQp::new(vec![1.0, 0.5, 2.0, 1.5], vec![0.3, -0.2, 0.1, 0.4]).unwrap();
        let x0 = [1.0, -1.0, 0.5, 2.0];
        let p = run_protocol(&c, &g, 0.7 + 1e-3, &x0, 20).unwrap();
        let m = matrix_trace(&c, &g, 0.7, &x0, 20).unwrap();
        let dev = equivalence_check(&p.iterates(), &m).unwrap();
        // both runs converge to the same optimum, so the gap opens at round 1 and then decays
        assert_eq!(dev[0], 0.0);
        assert!(dev[1..].iter().all(|d| *d > 1e3 * linalg::tol::EQUIVALENCE));
        assert!(!equivalent(&dev));
    }
}
