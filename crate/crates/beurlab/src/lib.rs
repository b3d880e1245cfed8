//! beurlab — numerics for self-neglecting flows and their circle groups.

// Parameter guards are written `!(x > 0.0)` on purpose: the negation also
// catches NaN, which a rewritten `x <= 0.0` would silently wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beck;
pub mod config;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod flows;
pub mod kernels;
pub mod limits;
pub mod num;
pub mod popa;
pub mod report;
pub mod tauberian;

pub use error::{Error, Result};
