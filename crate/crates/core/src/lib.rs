//! Numerical toolkit for autonomous Lagrange and Bolza problems with
//! possibly discontinuous, nonconvex Lagrangians.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod direct;
pub mod error;
pub mod extended;
pub mod lagrangian;
pub mod necessary;
pub mod regularity;
pub mod value;

pub use error::{Error, Result};
pub use extended::ExtReal;
