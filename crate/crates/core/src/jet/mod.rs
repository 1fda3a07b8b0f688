//! Scalar expressions, order-4 Taylor jets and sampled regularity estimators.

mod eval;
mod expr;
mod holder;
mod monotone;
mod taylor;

pub use eval::{eval, eval_jet, eval_log, Evaluator, JetError, LogValue};
pub use expr::{Node, RecipDomain, ScalarExpr};
pub use holder::{holder_seminorm, holder_seminorm_budget, holder_pairs};
pub use monotone::{omega_monotone_check, Modulus, MonotoneError, MonotoneSpec};
pub(crate) use holder::holder_seminorms_degree;
pub use taylor::{Jet4, Layout, MAX_ORDER, MAX_VARS};
