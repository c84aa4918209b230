//! Instance generators and independent reference computations shared by the test targets.
#![allow(dead_code)]

use optscale::graph::{connected_erdos_renyi, GraphRng, MAX_RESAMPLES};
use optscale::linalg::DenseMatrix;
use optscale::qp::{ArrowheadQp, PrivateBlock};
use optscale::WeightedGraph;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> GraphRng {
    GraphRng::seed_from_u64(seed)
}

/// Connected ER graph with `n` drawn from `sizes` and weights uniform in `[0.1, 2)`.
pub fn weighted_er(rng: &mut GraphRng, sizes: std::ops::RangeInclusive<usize>) -> WeightedGraph {
    let n = rng.random_range(sizes);
    let eps = if rng.random_bool(0.5) { 0.2 } else { 0.8 };
    let (g, _) = connected_erdos_renyi(n, eps, rng.random(), MAX_RESAMPLES).unwrap();
    let w: Vec<f64> = (0..g.edge_count()).map(|_| rng.random_range(0.1..2.0)).collect();
    g.with_weights(&w).unwrap()
}

pub fn unit_er(rng: &mut GraphRng, sizes: std::ops::RangeInclusive<usize>) -> WeightedGraph {
    let n = rng.random_range(sizes);
    let eps = if rng.random_bool(0.5) { 0.2 } else { 0.8 };
    connected_erdos_renyi(n, eps, rng.random(), MAX_RESAMPLES).unwrap().0
}

pub fn random_vec(rng: &mut GraphRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_matrix(rng: &mut GraphRng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `LLᵀ + shift·I` for a random `L`.
pub fn random_spd(rng: &mut GraphRng, n: usize, shift: f64) -> DenseMatrix {
    let l = random_matrix(rng, n, n);
    l.matmul(&l.transpose()).add(&DenseMatrix::identity(n).scale(shift)).symmetrized()
}

/// Arrowhead QP whose full Hessian is SPD: `Q_ss` exceeds the sum of Schur terms by `margin`.
pub fn random_arrowhead(rng: &mut GraphRng, agents: usize, margin: f64) -> ArrowheadQp {
    let blocks: Vec<PrivateBlock> = (0..agents)
        .map(|i| {
            let size = rng.random_range(1..=3);
            let q = random_spd(rng, size, 0.5);
            PrivateBlock::new(q, random_vec(rng, size, -1.0, 1.0), random_vec(rng, size, -1.0, 1.0), i).unwrap()
        })
        .collect();
    let t: f64 = blocks.iter().map(|b| b.schur_term()).sum();
    ArrowheadQp::new(blocks, t + margin, rng.random_range(-1.0..1.0)).unwrap()
}

/// Gaussian elimination with partial pivoting; returns `None` for a singular matrix.
pub fn gauss_solve(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().copied().chain([b[i]]).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k].abs() < 1e-300 {
            return None;
        }
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}

/// Complex determinant by elimination with partial pivoting, entries as `(re, im)`.
pub fn complex_det(mut m: Vec<Vec<(f64, f64)>>) -> (f64, f64) {
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let div = |a: (f64, f64), b: (f64, f64)| {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    };
    let abs = |a: (f64, f64)| a.0.hypot(a.1);
    let n = m.len();
    let mut det = (1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| abs(m[i][k]).total_cmp(&abs(m[j][k]))).unwrap();
        if abs(m[p][k]) == 0.0 {
            return (0.0, 0.0);
        }
        if p != k {
            m.swap(k, p);
            det = (-det.0, -det.1);
        }
        det = mul(det, m[k][k]);
        for i in k + 1..n {
            let f = div(m[i][k], m[k][k]);
            for j in k..n {
                let t = mul(f, m[k][j]);
                m[i][j] = (m[i][j].0 - t.0, m[i][j].1 - t.1);
            }
        }
    }
    det
}

/// Breadth-first connectivity over positive-weight edges.
pub fn bfs_connected(g: &WeightedGraph) -> bool {
    let n = g.node_count();
    let mut adj = vec![Vec::new(); n];
    for e in g.edges().iter().filter(|e| e.w > 0.0) {
        adj[e.i].push(e.j);
        adj[e.j].push(e.i);
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Graph made of two random connected components joined by nothing.
pub fn split_graph(rng: &mut GraphRng) -> WeightedGraph {
    let a = weighted_er(rng, 2..=6);
    let b = weighted_er(rng, 2..=6);
    let off = a.node_count();
    let edges = a
        .edges()
        .iter()
        .map(|e| (e.i, e.j, e.w))
        .chain(b.edges().iter().map(|e| (e.i + off, e.j + off, e.w)));
    WeightedGraph::new(off + b.node_count(), edges).unwrap()
}
