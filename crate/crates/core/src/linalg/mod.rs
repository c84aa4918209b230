//! Dense real linear algebra at desk scale: Jacobi eigensolver, Cholesky solves,
//! diagonal-definite pencils and the complement basis of the all-ones vector.

mod cholesky;
mod eigen;
mod matrix;

pub use cholesky::{solve_spd, Cholesky};
pub use eigen::{complement_basis, ones_complement_basis, pencil_eig, pencil_eigenvalues, sym_eig, EigenDecomposition};
pub use matrix::{axpy, dot, norm2, norm_inf, sub, DenseMatrix};

/// Numerical thresholds shared across the crate.
pub mod tol {
    /// Relative slack for the symmetry check.
    pub const SYMMETRY: f64 = 1e-12;
    /// Jacobi stops when the off-diagonal Frobenius norm is below this fraction of `‖S‖_F`.
    pub const JACOBI_OFF_DIAGONAL: f64 = 1e-12;
    pub const JACOBI_MAX_SWEEPS: usize = 100;
    /// Cholesky pivots at or below `CHOLESKY_PIVOT · trace / n` are rejected.
    pub const CHOLESKY_PIVOT: f64 = 1e-14;
    /// Absolute tolerance for arrowhead zero blocks.
    pub const ARROWHEAD_ZERO: f64 = 1e-12;
    /// Slack when checking that pencil eigenvalues lie in [-1, 1].
    pub const PENCIL_BOUND: f64 = 1e-10;
    /// Per-round deviation allowed between distributed and centralized runs.
    pub const EQUIVALENCE: f64 = 1e-10;
    /// Distance below which an ADMM run is treated as converged.
    pub const CONVERGED_DISTANCE: f64 = 1e-13;
    /// A symmetric matrix counts as negative definite when its top eigenvalue is below
    /// `-DEFINITENESS` times its scale.
    pub const DEFINITENESS: f64 = 1e-12;
}
