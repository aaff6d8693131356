//! Tolerance tiers shared by every check in the workspace.

/// Identities that are exact algebra in floating point.
pub const EXACT: f64 = 1e-12;
/// Comparisons between two routes that both use symbolic derivatives.
pub const SYMBOLIC: f64 = 1e-9;
/// Comparisons against a first-order finite-difference oracle.
pub const FINITE_DIFFERENCE: f64 = 1e-6;
/// Pipelines with nested finite differences (Cotton tensor).
pub const NESTED_FINITE_DIFFERENCE: f64 = 1e-5;

/// Base step for central differences; scaled by `1 + |coordinate|`.
pub const FD_STEP: f64 = 1e-5;
/// Step for the outer derivative of a quantity that is itself a finite difference.
pub const FD_OUTER_STEP: f64 = 1e-3;

/// Central-difference step at coordinate value `c`.
pub fn fd_step(c: f64) -> f64 {
    FD_STEP * (1.0 + c.abs())
}
