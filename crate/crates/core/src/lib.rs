//! Sum-of-squares decompositions of nonnegative symmetric matrix functions.
//!
//! A matrix function is peeled one rank-one square at a time (Schur
//! complement of the leading entry), the scalar pivots are written as sums of
//! squares, and every hypothesis the construction relies on is checked by
//! sampling with exact order-4 jets.
//!
//! Modules, bottom up:
//!
//! - [`jet`]: expression trees, exact jets, Hölder seminorms, ω-monotonicity.
//! - [`symmat`]: small dense symmetric matrices, Löwner order, comparability.
//! - [`decompose`]: 1-square decomposition, iterated peeling, scalar SOS backends.
//! - [`verify`]: hypothesis checkers and the end-to-end pipeline.
//! - [`gallery`]: named example matrices and their certificates.
//! - [`cli`]: JSON run configurations and reports.
//!
//! Runnable examples live under `examples/`:
//! `cargo run --example grushin_pipeline`, `cargo run --example q_lambda_certificates`, ...

pub mod cli;
pub mod decompose;
pub mod gallery;
pub mod grid;
pub mod jet;
pub mod report;
pub mod symmat;
pub mod verify;

pub use grid::GridSpec;
pub use jet::ScalarExpr;
pub use report::{CheckReport, Condition, Verdict};
