//! Geometry of Walker three-manifolds `ε dx² + f(x, y) dy² + 2 dt dy`.
//!
//! Every closed-form quantity here (frame connection, curvature, gradient of
//! the umbilicity factor, the two Lie-bracket expressions) is paired with an
//! independent route: a coordinate Koszul/Riemann/Cotton oracle, a
//! finite-difference measurement on a parametrized surface, or a chain-rule
//! re-derivation. The crate is `no_std` and only needs `alloc`.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod math;

pub mod connection;
pub mod expr;
pub mod grid;
pub mod parallel;
pub mod surface;
pub mod tolerance;
pub mod umbilic;
pub mod walker;

pub use expr::{EvalError, ParseError, ScalarExpr};
pub use walker::{CoordVector, FrameVector, Point, Sign, WalkerMetric};
