// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod exec;
pub mod expr;
pub mod green;
pub mod mlf;
pub mod operators;
mod quad;
