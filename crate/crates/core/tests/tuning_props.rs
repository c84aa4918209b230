mod common;

use common::*;
use optscale::linalg::{ones_complement_basis, pencil_eigenvalues, sym_eig, DenseMatrix};
use optscale::qp::ConsensusQp;
use optscale::tuning::{
    complement_predicate, connectivity_lmi, degree_complement_predicate, lmi_certifies_connected, optimal_rho, optimal_scaling_pipeline, optimize_weights, predicted_factor,
    second_largest_magnitude, worst_lambda, SpectralSummary, WeightOptOptions,
};
use optscale::WeightedGraph;
use rand::Rng;

fn lambda_second(g: &WeightedGraph) -> f64 {
    let l = pencil_eigenvalues(&g.adjacency(), &g.degree_matrix()).unwrap();
    l[l.len() - 2]
}

// sign change of the ones-complement predicate, from the restricted pencil
fn restricted_threshold(g: &WeightedGraph) -> f64 {
    let p = ones_complement_basis(g.node_count());
    let a = p.transpose().matmul(&g.adjacency()).matmul(&p).symmetrized();
    let d = p.transpose().matmul(&g.degree_matrix()).matmul(&p).symmetrized();
    let e = sym_eig(&d).unwrap();
    let k = e.eigenvalues.len();
    let inv_sqrt = DenseMatrix::from_fn(k, k, |i, j| {
        (0..k).map(|l| e.eigenvector(l)[i] * e.eigenvector(l)[j] / e.eigenvalues[l].sqrt()).sum()
    });
    sym_eig(&inv_sqrt.matmul(&a).matmul(&inv_sqrt).symmetrized()).unwrap().max()
}

#[test]
fn ones_complement_predicate_is_sufficient() {
    let mut r = rng(21);
    for _ in 0..40 {
        let g = weighted_er(&mut r, 2..=12);
        let l2 = lambda_second(&g);
        let t = restricted_threshold(&g);
        assert!(t >= l2 - 1e-12, "threshold {t} below λ₂ {l2}");
        assert!(complement_predicate(&g, t + 1e-6).unwrap() < 0.0);
        assert!(complement_predicate(&g, t - 1e-6).unwrap() > 0.0);
        assert!(complement_predicate(&g, 1.0 + 1e-6).unwrap() < 0.0);
    }
}

#[test]
fn ones_complement_predicate_flips_on_regular_graphs() {
    let mut graphs = vec![WeightedGraph::complete(5), WeightedGraph::path(2)];
    for n in [3, 6, 9] {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        graphs.push(WeightedGraph::unweighted(n, edges).unwrap());
    }
    for g in graphs {
        let l2 = lambda_second(&g);
        assert!(complement_predicate(&g, l2 + 1e-6).unwrap() < 0.0);
        assert!(complement_predicate(&g, l2 - 1e-6).unwrap() > 0.0);
    }
}

#[test]
fn degree_complement_predicate_flips_at_second_eigenvalue() {
    let mut r = rng(27);
    for _ in 0..40 {
        let g = weighted_er(&mut r, 2..=12);
        let l2 = lambda_second(&g);
        assert!(degree_complement_predicate(&g, l2 + 1e-6).unwrap() < 0.0);
        assert!(degree_complement_predicate(&g, l2 - 1e-6).unwrap() > 0.0);
    }
}

#[test]
fn connectivity_lmi_matches_search() {
    let mut r = rng(22);
    for k in 0..40 {
        let g = if k % 2 == 0 { weighted_er(&mut r, 2..=10) } else { split_graph(&mut r) };
        let connected = bfs_connected(&g);
        assert_eq!(lmi_certifies_connected(&g).unwrap(), connected);
        let top = connectivity_lmi(&g).unwrap();
        if !connected {
            assert!(top.abs() < 1e-12, "disconnected graph gives {top}");
        }
    }
}

// the pencil eigenvalues of any graph sum to zero, so λ_{n−1} ≥ −1/(n−1),
// with equality for uniformly weighted complete graphs
#[test]
fn complete_graph_reaches_trace_bound() {
    for n in [3, 4, 6] {
        let res = optimize_weights(&WeightedGraph::complete(n), &WeightOptOptions::default()).unwrap();
        let bound = -1.0 / (n as f64 - 1.0);
        assert!(res.lambda_second_star >= bound - 1e-9);
        assert!(res.lambda_second_star <= bound + 1e-4, "n = {n}: {}", res.lambda_second_star);
    }
}

#[test]
fn optimized_weights_are_admissible_and_no_worse_than_uniform() {
    let mut r = rng(23);
    for _ in 0..12 {
        let g = unit_er(&mut r, 4..=10);
        let n = g.node_count();
        let res = optimize_weights(&g, &WeightOptOptions::default()).unwrap();
        let wg = res.graph(&g).unwrap();
        assert!(res.weights.iter().all(|w| *w >= 0.0));
        assert!((res.weights.iter().sum::<f64>() - n as f64 / 2.0).abs() < 1e-10);
        let eps = 1e-3 * n as f64 / g.edge_count() as f64;
        assert!(wg.degrees().iter().all(|d| *d > eps));
        assert!(bfs_connected(&wg));
        assert!((lambda_second(&wg) - res.lambda_second_star).abs() < 1e-12);
        assert!(res.lambda_second_star <= lambda_second(&g) + 1e-12);
        assert!(res.lambda_second_star >= -1.0 / (n as f64 - 1.0) - 1e-9);
        // infeasible probes sit below the answer, feasible ones above it
        for p in &res.bisection_history {
            if p.feasible {
                assert!(p.lambda >= res.lambda_second_star - 1e-12);
            }
        }
        assert!(degree_complement_predicate(&wg, res.lambda_second_star + 1e-6).unwrap() < 0.0);
        // the last feasible probe certifies the returned weights' λ₂ from above
        if let Some(p) = res.bisection_history.iter().filter(|p| p.feasible).last() {
            assert!(res.lambda_second_star <= p.lambda);
        }
    }
}

#[test]
fn optimal_step_beats_a_log_grid() {
    let mut r = rng(24);
    for _ in 0..30 {
        let g = weighted_er(&mut r, 2..=12);
        let kappa = r.random_range(0.2..5.0);
        let s = SpectralSummary::from_graph(&g, kappa).unwrap();
        let rho = optimal_rho(s.lambda_second, kappa);
        let best = second_largest_magnitude(rho, kappa, &s);
        assert!(best >= 0.5 - 1e-12);
        assert!((best - predicted_factor(s.lambda_second)).abs() < 1e-7);
        for k in 0..30 {
            let trial = rho * 10f64.powf(-1.5 + 3.0 * k as f64 / 29.0);
            assert!(second_largest_magnitude(trial, kappa, &s) >= best - 1e-9);
        }
    }
}

#[test]
fn worst_pencil_value_is_an_extreme_one() {
    let mut r = rng(25);
    for _ in 0..20 {
        let g = weighted_er(&mut r, 3..=10);
        let s = SpectralSummary::from_graph(&g, 1.0).unwrap();
        let rho = r.random_range(0.1..5.0);
        let w = worst_lambda(rho, 1.0, &s);
        assert!(w == s.lambdas[0] || w == s.lambda_second);
    }
}

#[test]
fn pipeline_keeps_consensus_optimum() {
    let mut r = rng(26);
    let g = unit_er(&mut r, 6..=8);
    let n = g.node_count();
    let c = ConsensusQp::new(random_vec(&mut r, n, 0.5, 2.0), random_vec(&mut r, n, -1.0, 1.0)).unwrap();
    let (plan, _) = optimal_scaling_pipeline(&c, &g, &WeightOptOptions::default()).unwrap();
    let before: f64 = c.qhat.iter().sum();
    let after: f64 = plan.q_transformed.iter().sum();
    assert!((before - after).abs() < 1e-12 * before);
    assert!(plan.phi_star >= 0.5);
}
