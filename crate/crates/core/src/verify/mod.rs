//! Sampled hypothesis checkers.
//!
//! Every checker returns a [`CheckReport`](crate::report::CheckReport). A
//! bound `lhs <~ rhs` is accepted when the sampled ratio stays below the cap
//! of the [`BoundRule`](crate::report::BoundRule) and does not grow across
//! the innermost dyadic shells; samples where both sides vanish are excluded.

mod elliptic;
mod pipeline;
mod strong;
mod subordinate;

pub use elliptic::{diag_elliptic_check, diag_elliptic_check_with, quasiconformal_check, tail_diagonal_check};
pub use pipeline::{decomposition_pipeline, PipelineOutcome, PipelineParams, Refusal};
pub use strong::{
    delta_from_delta_prime, diag_exponent, diffprov_check, offdiag_exponent, strong_check, strong_check_with,
    StrongParams,
};
pub use subordinate::{subordinate_check, subordinate_check_with};

use crate::decompose::{DecomposeError, MatFunError};
use crate::jet::JetError;
use crate::symmat::SymError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    MatFun(#[from] MatFunError),
}
