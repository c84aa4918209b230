use thiserror::Error;

/// Errors raised anywhere in the optimal-scaling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: |S[{row}][{col}] - S[{col}][{row}]| = {gap:e}")]
    NonSymmetric { row: usize, col: usize, gap: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("pencil weight matrix has a non-positive diagonal entry D[{index}] = {value}")]
    SingularD { index: usize, value: f64 },

    #[error("matrix is not positive definite (Cholesky pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is rank deficient: {what}")]
    RankDeficient { what: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("objective is not arrowhead-structured: block ({0}, {1}) has entry {2:e}")]
    NotArrowhead(usize, usize, f64),

    #[error("private block {index} is not positive definite")]
    BlockNotSpd { index: usize },

    #[error("invalid alpha split: {0}")]
    InvalidAlphas(String),

    #[error("reduced piece {index} is not convex: Qhat = {value:e}")]
    NonConvexPiece { index: usize, value: f64 },

    #[error("local objective at node {index} is not convex: Qhat = {value:e}")]
    NonConvexLocal { index: usize, value: f64 },

    #[error("distance sequence stagnated; no contraction to estimate")]
    Stagnated,

    #[error("not enough samples for a convergence-factor fit: {0}")]
    ShortTrace(String),

    #[error("no edge weights make the topology connected")]
    InfeasibleTopology,

    #[error("traces have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("could not sample a connected graph after {0} attempts")]
    ResampleExhausted(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
