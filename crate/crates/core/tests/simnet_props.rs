mod common;

use common::*;
use optscale::experiments::positive_support;
use optscale::qp::{shared_optimum, ConsensusQp};
use optscale::scaled_admm::{AdmmEngine, RunOptions};
use optscale::simnet::{equivalence_check, equivalent, matrix_trace, run_protocol, Network};
use optscale::tuning::{optimal_scaling_pipeline, WeightOptOptions};
use rand::Rng;

fn instance(r: &mut optscale::graph::GraphRng) -> (ConsensusQp, optscale::WeightedGraph, f64, Vec<f64>) {
    let g = weighted_er(r, 2..=15);
    let n = g.node_count();
    let c = ConsensusQp::new(random_vec(r, n, 0.1, 3.0), random_vec(r, n, -1.0, 1.0)).unwrap();
    let rho = r.random_range(0.05..4.0);
    let x0 = random_vec(r, n, -2.0, 2.0);
    (c, g, rho, x0)
}

#[test]
fn protocol_reproduces_matrix_recursion_and_engine() {
    let mut r = rng(31);
    for _ in 0..50 {
        let (c, g, rho, x0) = instance(&mut r);
        let p = run_protocol(&c, &g, rho, &x0, 20).unwrap();
        let m = matrix_trace(&c, &g, rho, &x0, 20).unwrap();
        assert!(equivalent(&equivalence_check(&p.iterates(), &m).unwrap()));
        let engine = AdmmEngine::consensus(&c.qhat, &c.qlin, &g, rho).unwrap();
        let t = engine.run(&x0, &RunOptions::fixed(20), None).unwrap();
        assert!(equivalent(&equivalence_check(&p.iterates(), &t.iterates).unwrap()));
    }
}

#[test]
fn duals_cancel_and_degrees_add_up() {
    let mut r = rng(32);
    for _ in 0..20 {
        let (c, g, rho, x0) = instance(&mut r);
        let mut net = Network::new(&c, &g, rho).unwrap();
        let t = net.run(&x0, 40).unwrap();
        assert!(t.rounds.iter().all(|l| l.dual_gap <= 1e-12));
        assert!(t.rounds.iter().all(|l| l.messages == 2 * g.edge_count()));
        assert!(t.is_local(&g));
        let deg = g.degrees();
        for a in net.agents() {
            assert!((a.degree - deg[a.id]).abs() < 1e-12);
            assert_eq!(a.duals().len(), g.neighbors()[a.id].len());
        }
    }
}

#[test]
fn optimal_plan_reaches_consensus_in_predicted_rounds() {
    let mut r = rng(33);
    for _ in 0..10 {
        let g = unit_er(&mut r, 4..=10);
        let n = g.node_count();
        let c = ConsensusQp::new(random_vec(&mut r, n, 0.5, 2.0), random_vec(&mut r, n, -1.0, 1.0)).unwrap();
        let (plan, _) = optimal_scaling_pipeline(&c, &g, &WeightOptOptions::default()).unwrap();
        let support = positive_support(&plan.graph(&g).unwrap()).unwrap();
        let scaled = c.with_curvatures(plan.q_transformed.clone()).unwrap();
        let xbar = shared_optimum(&c);
        let x0 = random_vec(&mut r, n, -1.0, 1.0);
        let dev0 = x0.iter().map(|x| (x - xbar).abs()).fold(0.0, f64::max);
        let rounds = ((1e-8 / dev0).ln() / plan.phi_star.ln()).ceil() as usize + 20;
        let t = run_protocol(&scaled, &support, plan.rho_star, &x0, rounds).unwrap();
        let last = t.rounds.last().unwrap().max_dev;
        assert!(last < 1e-8, "deviation {last} after {rounds} rounds");
    }
}

#[test]
fn runs_are_deterministic() {
    let mut r = rng(34);
    let (c, g, rho, x0) = instance(&mut r);
    let a = run_protocol(&c, &g, rho, &x0, 30).unwrap();
    let b = run_protocol(&c, &g, rho, &x0, 30).unwrap();
    assert_eq!(a.rounds, b.rounds);
    assert_eq!(a.ledger, b.ledger);
}
