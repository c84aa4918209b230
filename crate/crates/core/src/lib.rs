//! Optimally scaled ADMM for distributed quadratic programming.
//!
//! An arrowhead-structured QP is reduced to a consensus problem over a communication graph
//! ([`qp`]); the scaled ADMM iteration for that problem is a linear recursion whose spectrum
//! has a closed form ([`scaled_admm`]); [`tuning`] picks edge weights and the step-size that
//! minimize the convergence factor; [`simnet`] runs the same iteration as a message-passing
//! protocol between graph nodes.

pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod qp;
pub mod scaled_admm;
pub mod simnet;
pub mod tuning;

pub use error::{Error, Result};
pub use graph::{GraphMatrices, WeightedGraph};
pub use linalg::DenseMatrix;
pub use qp::{AlphaSplit, ArrowheadQp, ConsensusQp};
pub use tuning::{ScalingPlan, SpectralSummary, WeightOptResult};
