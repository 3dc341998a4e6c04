// `!(x >= 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod operator;
pub mod joint;
pub mod spectral;
pub mod registry;

pub use error::{Error, Result};
