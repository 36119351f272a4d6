//! Utility maximization in finite incomplete markets through Orlicz-space
//! duality: conjugate utilities, Orlicz norms, event-tree markets, primal and
//! dual solvers, and closed-form singular-part examples.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dual;
pub mod error;
pub mod lp;
pub mod market;
pub mod numeric;
pub mod orlicz;
pub mod primal;
pub mod singular;
pub mod utility;

pub use dual::{dual_optimize, dual_optimize_with, lambda_star, DualMethod, DualOptions, DualSolution};
pub use error::{Error, Result};
pub use market::{EventTree, LossBound, Strategy};
pub use orlicz::FiniteRV;
pub use primal::{primal_optimize, verify_duality, PrimalSolution};
pub use utility::{CustomUtility, ExtendedReal, UtilityFunction};
