//! Weighted undirected graphs and the matrices derived from them.
//!
//! Every edge is oriented from its lower-indexed endpoint (tail) to its higher-indexed
//! endpoint (head), and edges are kept sorted by `(i, j)`, so incidence matrices are
//! reproducible across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Generator behind [`erdos_renyi`]: ChaCha with 8 rounds, seeded via `seed_from_u64`.
pub type GraphRng = ChaCha8Rng;

/// Undirected edge with `i < j` and weight `w ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates and canonicalizes `(i, j, w)` triples: endpoints are ordered, edges sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) has invalid weight {w}")));
            }
            out.push(Edge { i: a.min(b), j: a.max(b), w });
        }
        out.sort_by(|x, y| (x.i, x.j).cmp(&(y.i, y.j)));
        if let Some(pair) = out.windows(2).find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j)) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", pair[0].i, pair[0].j)));
        }
        Ok(Self { n, edges: out })
    }

    /// Unit-weight graph on the given pairs.
    pub fn unweighted(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, pairs.into_iter().map(|(i, j)| (i, j, 1.0)))
    }

    pub fn path(n: usize) -> Self {
        Self::unweighted(n, (1..n).map(|i| (i - 1, i))).expect("path graph is valid")
    }

    pub fn complete(n: usize) -> Self {
        Self::unweighted(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))).expect("complete graph is valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.w).collect()
    }

    /// Same topology with new weights, in canonical edge order.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::Dimension(format!("{} weights for {} edges", weights.len(), self.edges.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGraph(format!("invalid weight {w}")));
        }
        let edges = self.edges.iter().zip(weights).map(|(e, &w)| Edge { w, ..*e }).collect();
        Ok(Self { n: self.n, edges })
    }

    pub fn with_unit_weights(&self) -> Self {
        self.with_weights(&vec![1.0; self.edges.len()]).expect("unit weights are valid")
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.i] += e.w;
            d[e.j] += e.w;
        }
        d
    }

    /// Indices of edges incident to each node, in canonical edge order.
    pub fn incident_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (k, e) in self.edges.iter().enumerate() {
            inc[e.i].push(k);
            inc[e.j].push(k);
        }
        inc
    }

    pub fn adjacency(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.w;
            a[(e.j, e.i)] = e.w;
        }
        a
    }

    pub fn degree_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diag(&self.degrees())
    }

    /// True iff every node is reachable; with `strict_positive`, zero-weight edges are ignored.
    pub fn is_connected(&self, strict_positive: bool) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            if strict_positive && !(e.w > 0.0) {
                continue;
            }
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    /// Node adjacency lists (ignores weights).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n];
        for e in &self.edges {
            nb[e.i].push(e.j);
            nb[e.j].push(e.i);
        }
        nb
    }
}

/// Incidence halves and weighted adjacency/degree matrices of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrices {
    /// `m × n`, row `e` has a one at the head of edge `e`.
    pub b_in: DenseMatrix,
    /// `m × n`, row `e` has a one at the tail of edge `e`.
    pub b_out: DenseMatrix,
    pub adjacency: DenseMatrix,
    pub degree: DenseMatrix,
    /// `m × m` diagonal of edge weights.
    pub weights: DenseMatrix,
}

pub fn build_matrices(g: &WeightedGraph) -> GraphMatrices {
    let (n, m) = (g.node_count(), g.edge_count());
    let mut b_in = DenseMatrix::zeros(m, n);
    let mut b_out = DenseMatrix::zeros(m, n);
    for (k, e) in g.edges().iter().enumerate() {
        b_out[(k, e.i)] = 1.0;
        b_in[(k, e.j)] = 1.0;
    }
    GraphMatrices {
        b_in,
        b_out,
        adjacency: g.adjacency(),
        degree: g.degree_matrix(),
        weights: DenseMatrix::from_diag(&g.weights()),
    }
}

/// Edge probability `(1 + ε)·ln(n)/n`, clamped to 1.
pub fn erdos_renyi_probability(n: usize, epsilon: f64) -> f64 {
    ((1.0 + epsilon) * (n as f64).ln() / n as f64).min(1.0)
}

/// Erdős–Rényi sample with unit weights; each pair `i < j` is drawn in lexicographic order.
pub fn erdos_renyi(n: usize, epsilon: f64, seed: u64) -> WeightedGraph {
    let mut rng = GraphRng::seed_from_u64(seed);
    erdos_renyi_with(n, epsilon, &mut rng)
}

pub fn erdos_renyi_with<R: Rng + ?Sized>(n: usize, epsilon: f64, rng: &mut R) -> WeightedGraph {
    assert!(n >= 2, "erdos_renyi needs n >= 2");
    let p = erdos_renyi_probability(n, epsilon);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    WeightedGraph::unweighted(n, pairs).expect("sampled pairs are valid")
}

/// Resamples from one seeded stream until a connected graph appears.
///
/// Returns the graph and the number of draws it took.
pub fn connected_erdos_renyi(n: usize, epsilon: f64, seed: u64, max_attempts: usize) -> Result<(WeightedGraph, usize)> {
    let mut rng = GraphRng::seed_from_u64(seed);
    for attempt in 1..=max_attempts {
        let g = erdos_renyi_with(n, epsilon, &mut rng);
        if g.is_connected(true) {
            return Ok((g, attempt));
        }
    }
    Err(Error::ResampleExhausted(max_attempts))
}

pub const MAX_RESAMPLES: usize = 1000;
