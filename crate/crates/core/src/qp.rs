//! Arrowhead-structured QPs and their reduction to a scalar consensus problem.
//!
//! The objective is `½ ηᵀ Q̄ η + q̄ᵀ η` with `η = (η_1, …, η_N, η_s)`, where every private
//! block `η_i` couples to the others only through the scalar shared variable `η_s`.
//! Throughout the crate the linear term enters with a plus sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, tol, Cholesky, DenseMatrix};

/// One agent's private data: `Q_ii`, the coupling column `Q_is` and the linear term `q_i`.
#[derive(Debug, Clone)]
pub struct PrivateBlock {
    pub q_ii: DenseMatrix,
    pub q_is: Vec<f64>,
    pub q_i: Vec<f64>,
    chol: Cholesky,
}

impl PrivateBlock {
    pub fn new(q_ii: DenseMatrix, q_is: Vec<f64>, q_i: Vec<f64>, index: usize) -> Result<Self> {
        let size = q_ii.rows();
        if !q_ii.is_square() || q_is.len() != size || q_i.len() != size {
            return Err(Error::Dimension(format!(
                "block {index}: Q is {}x{}, Qis has {}, q has {}",
                q_ii.rows(),
                q_ii.cols(),
                q_is.len(),
                q_i.len()
            )));
        }
        let chol = Cholesky::factor(&q_ii).map_err(|_| Error::BlockNotSpd { index })?;
        Ok(Self { q_ii, q_is, q_i, chol })
    }

    pub fn size(&self) -> usize {
        self.q_is.len()
    }

    /// Schur term `T_i = Q_isᵀ Q_ii⁻¹ Q_is`.
    pub fn schur_term(&self) -> f64 {
        dot(&self.q_is, &self.chol.solve(&self.q_is))
    }

    /// `Q_isᵀ Q_ii⁻¹ q_i`.
    pub fn linear_coupling(&self) -> f64 {
        dot(&self.q_is, &self.chol.solve(&self.q_i))
    }

    /// Minimizer of the private block for a fixed shared value: `−Q_ii⁻¹(q_i + Q_is η_s)`.
    pub fn private_optimum(&self, eta_s: f64) -> Vec<f64> {
        let rhs: Vec<f64> = self.q_i.iter().zip(&self.q_is).map(|(q, c)| -(q + c * eta_s)).collect();
        self.chol.solve(&rhs)
    }
}

#[derive(Debug, Clone)]
pub struct ArrowheadQp {
    pub blocks: Vec<PrivateBlock>,
    pub q_ss: f64,
    pub q_s: f64,
}

impl ArrowheadQp {
    pub fn new(blocks: Vec<PrivateBlock>, q_ss: f64, q_s: f64) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Dimension("arrowhead QP needs at least one block".into()));
        }
        if !(q_ss > 0.0) {
            return Err(Error::NotPositiveDefinite { row: 0, pivot: q_ss });
        }
        Ok(Self { blocks, q_ss, q_s })
    }

    pub fn agent_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(PrivateBlock::size).sum::<usize>() + 1
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(PrivateBlock::size).collect()
    }

    pub fn schur_terms(&self) -> Vec<f64> {
        self.blocks.iter().map(PrivateBlock::schur_term).collect()
    }

    /// Schur complement of the full Hessian with respect to the shared variable.
    pub fn shared_schur_complement(&self) -> f64 {
        self.q_ss - self.schur_terms().iter().sum::<f64>()
    }

    /// Dense `(Q̄, q̄)` in block order `(η_1, …, η_N, η_s)`.
    pub fn assemble(&self) -> (DenseMatrix, Vec<f64>) {
        let n = self.dim();
        let s = n - 1;
        let mut q = DenseMatrix::zeros(n, n);
        let mut lin = vec![0.0; n];
        let mut off = 0;
        for b in &self.blocks {
            for r in 0..b.size() {
                for c in 0..b.size() {
                    q[(off + r, off + c)] = b.q_ii[(r, c)];
                }
                q[(off + r, s)] = b.q_is[r];
                q[(s, off + r)] = b.q_is[r];
                lin[off + r] = b.q_i[r];
            }
            off += b.size();
        }
        q[(s, s)] = self.q_ss;
        lin[s] = self.q_s;
        (q, lin)
    }
}

/// Extracts the arrowhead blocks from a dense symmetric `Q̄`.
///
/// `block_sizes` lists the private block sizes; the trailing row/column is the shared variable.
/// Entries coupling two different private blocks must vanish (`≤ 1e-12`).
pub fn validate_arrowhead(qbar: &DenseMatrix, lin: &[f64], block_sizes: &[usize]) -> Result<ArrowheadQp> {
    qbar.check_symmetric()?;
    let n = qbar.rows();
    if block_sizes.iter().sum::<usize>() + 1 != n || lin.len() != n {
        return Err(Error::Dimension(format!(
            "block sizes {block_sizes:?} plus the shared scalar do not match a {n}x{n} matrix with {} linear terms",
            lin.len()
        )));
    }
    let s = n - 1;
    let offsets: Vec<usize> = block_sizes
        .iter()
        .scan(0, |acc, &k| {
            let o = *acc;
            *acc += k;
            Some(o)
        })
        .collect();
    for (bi, (&oi, &ki)) in offsets.iter().zip(block_sizes).enumerate() {
        for (bj, (&oj, &kj)) in offsets.iter().zip(block_sizes).enumerate() {
            if bi == bj {
                continue;
            }
            for r in oi..oi + ki {
                for c in oj..oj + kj {
                    if qbar[(r, c)].abs() > tol::ARROWHEAD_ZERO {
                        return Err(Error::NotArrowhead(bi, bj, qbar[(r, c)]));
                    }
                }
            }
        }
    }
    let mut blocks = Vec::with_capacity(block_sizes.len());
    for (index, (&o, &k)) in offsets.iter().zip(block_sizes).enumerate() {
        let q_ii = DenseMatrix::from_fn(k, k, |r, c| qbar[(o + r, o + c)]);
        let q_is = (o..o + k).map(|r| qbar[(r, s)]).collect();
        let q_i = lin[o..o + k].to_vec();
        blocks.push(PrivateBlock::new(q_ii, q_is, q_i, index)?);
    }
    ArrowheadQp::new(blocks, qbar[(s, s)], lin[s])
}

/// Shares `α_i > 0` of the shared-variable cost, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSplit {
    alphas: Vec<f64>,
}

impl AlphaSplit {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidAlphas("empty split".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0)) {
            return Err(Error::InvalidAlphas(format!("non-positive share {a}")));
        }
        let total: f64 = alphas.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidAlphas(format!("shares sum to {total}, not 1")));
        }
        Ok(Self { alphas })
    }

    pub fn uniform(n: usize) -> Self {
        Self { alphas: vec![1.0 / n as f64; n] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alphas
    }
}

/// Constructive split that makes every reduced curvature equal:
/// `ε = (Q_ss − Σ T_i)/N`, `α_i = (T_i + ε)/Q_ss`.
pub fn allocate_alphas(p: &ArrowheadQp) -> Result<AlphaSplit> {
    let t = p.schur_terms();
    let n = t.len() as f64;
    let gap = p.q_ss - t.iter().sum::<f64>();
    if !(gap > 0.0) {
        return Err(Error::NotPositiveDefinite { row: p.dim() - 1, pivot: gap });
    }
    let eps = gap / n;
    Ok(AlphaSplit { alphas: t.iter().map(|ti| (ti + eps) / p.q_ss).collect() })
}

/// Scalar consensus problem `min Σ_i ½ Q̂_i x_i² + q̂_i x_i` subject to all `x_i` equal.
#[derive(Debug, Clone)]
pub struct ConsensusQp {
    pub qhat: Vec<f64>,
    pub qlin: Vec<f64>,
    /// Private data for recovering `η_i`; empty for problems built directly.
    pub recovery: Vec<PrivateBlock>,
}

impl ConsensusQp {
    pub fn new(qhat: Vec<f64>, qlin: Vec<f64>) -> Result<Self> {
        if qhat.len() != qlin.len() || qhat.is_empty() {
            return Err(Error::Dimension(format!("{} curvatures, {} linear terms", qhat.len(), qlin.len())));
        }
        if let Some((index, &value)) = qhat.iter().enumerate().find(|(_, q)| !(**q > 0.0)) {
            return Err(Error::NonConvexPiece { index, value });
        }
        Ok(Self { qhat, qlin, recovery: Vec::new() })
    }

    /// Average consensus: `Q = c·I`, `q = 0`.
    pub fn average(n: usize, curvature: f64) -> Result<Self> {
        Self::new(vec![curvature; n], vec![0.0; n])
    }

    pub fn node_count(&self) -> usize {
        self.qhat.len()
    }

    /// Objective at the consensus point `x_i = y` for all `i`.
    pub fn consensus_objective(&self, y: f64) -> f64 {
        let a: f64 = self.qhat.iter().sum();
        let b: f64 = self.qlin.iter().sum();
        0.5 * a * y * y + b * y
    }

    /// Same problem with curvatures replaced (linear terms and recovery data kept).
    pub fn with_curvatures(&self, qhat: Vec<f64>) -> Result<Self> {
        let mut c = Self::new(qhat, self.qlin.clone())?;
        c.recovery = self.recovery.clone();
        Ok(c)
    }
}

pub fn reduce_to_consensus(p: &ArrowheadQp, alphas: &AlphaSplit) -> Result<ConsensusQp> {
    if alphas.as_slice().len() != p.agent_count() {
        return Err(Error::InvalidAlphas(format!(
            "{} shares for {} agents",
            alphas.as_slice().len(),
            p.agent_count()
        )));
    }
    let mut qhat = Vec::with_capacity(p.agent_count());
    let mut qlin = Vec::with_capacity(p.agent_count());
    for (index, (b, &a)) in p.blocks.iter().zip(alphas.as_slice()).enumerate() {
        let value = p.q_ss * a - b.schur_term();
        if !(value > 0.0) {
            return Err(Error::NonConvexPiece { index, value });
        }
        qhat.push(value);
        qlin.push(p.q_s * a - b.linear_coupling());
    }
    Ok(ConsensusQp { qhat, qlin, recovery: p.blocks.clone() })
}

/// Consensus value `x̄ = −Σ q̂_i / Σ Q̂_i`.
pub fn shared_optimum(c: &ConsensusQp) -> f64 {
    -c.qlin.iter().sum::<f64>() / c.qhat.iter().sum::<f64>()
}

/// Private optima `η_i = −Q_ii⁻¹(q_i + Q_is η_s)` for every agent.
pub fn recover_private(c: &ConsensusQp, eta_s: f64) -> Vec<Vec<f64>> {
    c.recovery.iter().map(|b| b.private_optimum(eta_s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(q: &[[f64; 2]; 2], c: [f64; 2], lin: [f64; 2], i: usize) -> PrivateBlock {
        PrivateBlock::new(DenseMatrix::from_rows(q).unwrap(), c.to_vec(), lin.to_vec(), i).unwrap()
    }

    #[test]
    fn forbidden_cross_block_is_named() {
        let mut q = DenseMatrix::identity(5);
        q[(0, 2)] = 0.5;
        q[(2, 0)] = 0.5;
        let err = validate_arrowhead(&q, &[0.0; 5], &[2, 2]).unwrap_err();
        assert!(matches!(err, Error::NotArrowhead(0, 1, _)));
    }

    #[test]
    fn block_not_spd() {
        let mut q = DenseMatrix::identity(3);
        q[(0, 0)] = -1.0;
        assert!(matches!(validate_arrowhead(&q, &[0.0; 3], &[1, 1]), Err(Error::BlockNotSpd { index: 0 })));
    }

    #[test]
    fn zero_coupling_splits_evenly() {
        let b = |i| block(&[[2.0, 0.0], [0.0, 3.0]], [0.0, 0.0], [1.0, 1.0], i);
        let p = ArrowheadQp::new(vec![b(0), b(1), b(2), b(3)], 6.0, 1.0).unwrap();
        let a = allocate_alphas(&p).unwrap();
        for &x in a.as_slice() {
            assert!((x - 0.25).abs() < 1e-15);
        }
        let c = reduce_to_consensus(&p, &a).unwrap();
        for &q in &c.qhat {
            assert!((q - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_linear_term_gives_zero_qhat_lin() {
        let p = ArrowheadQp::new(vec![block(&[[4.0, 1.0], [1.0, 6.0]], [1.0, 2.0], [0.0, 0.0], 0)], 8.0, 0.0).unwrap();
        let c = reduce_to_consensus(&p, &AlphaSplit::uniform(1)).unwrap();
        assert_eq!(c.qlin, vec![0.0]);
        assert_eq!(shared_optimum(&c), 0.0);
        assert_eq!(recover_private(&c, 0.0), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn nonconvex_piece_reported() {
        let p = ArrowheadQp::new(
            vec![
                block(&[[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], [0.0, 0.0], 0),
                block(&[[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], [0.0, 0.0], 1),
            ],
            4.0,
            0.0,
        )
        .unwrap();
        let even = AlphaSplit::new(vec![0.25, 0.75]).unwrap();
        assert!(matches!(reduce_to_consensus(&p, &even), Err(Error::NonConvexPiece { index: 0, .. })));
    }

    #[test]
    fn alpha_split_validation() {
        assert!(AlphaSplit::new(vec![0.5, 0.6]).is_err());
        assert!(AlphaSplit::new(vec![1.5, -0.5]).is_err());
        assert!(AlphaSplit::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn indefinite_shared_block_rejected() {
        let p = ArrowheadQp::new(vec![block(&[[1.0, 0.0], [0.0, 1.0]], [2.0, 0.0], [0.0, 0.0], 0)], 3.0, 0.0).unwrap();
        assert!(matches!(allocate_alphas(&p), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn single_agent_consensus() {
        let c = ConsensusQp::new(vec![2.0], vec![-3.0]).unwrap();
        assert_eq!(shared_optimum(&c), 1.5);
    }
}
