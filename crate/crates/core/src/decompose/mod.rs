//! Sum-of-squares decomposition of symmetric matrix functions.
//!
//! [`one_sd`] peels the leading entry off a matrix function, [`iterated_sd`]
//! repeats that to a chosen depth, [`scalar_sos`] writes each pivot as a sum
//! of squares and [`assemble_x`] turns the peels into vector fields.

mod matfun;
mod peel;
mod sos;

pub use matfun::{MatFunError, StructureTags, SymMatFun};
pub use peel::{
    assemble_x, iterated_sd, one_sd, OneSquare, PeelStep, SquareDecomposition, PIVOT_FLOOR, RECONSTRUCTION_TOL,
};
pub use sos::{
    default_delta_prime, principal_root, scalar_sos, square_factor, BackendId, ScalarSos, ScalarSosBackend,
};

use crate::jet::JetError;
use crate::symmat::SymError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecomposeError {
    #[error("depth p = {p} outside 1..={max}")]
    Depth { p: usize, max: usize },
    #[error("pivot {k} vanishes at {point:?} (value {value:e})")]
    PivotVanishing { k: usize, point: Vec<f64>, value: f64 },
    #[error("pivot {k} is negative at {point:?} (value {value:e})")]
    NegativePivot { k: usize, point: Vec<f64>, value: f64 },
    #[error("function is negative at {point:?} (value {value:e})")]
    Negative { point: Vec<f64>, value: f64 },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    MatFun(#[from] MatFunError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Sym(#[from] SymError),
}
