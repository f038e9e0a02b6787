//! Error types shared across the crate.
//!
//! Guard violations are hard errors at the operation level: a state that is
//! not spacelike or not strictly convex makes the flow speed meaningless (the
//! equation degenerates), so geometry and right-hand-side evaluations refuse
//! it. The run loop in [`crate::integrate`] converts these errors into a
//! [`crate::integrate::Termination`] verdict instead of propagating them.

use thiserror::Error;

/// Errors raised by geometry, kernel, and theory operations.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FlowError {
    /// `|u_xi| >= (1 - eps_space) * u` at the given node: the graph is about
    /// to touch the light cone and the tilt factor `v` degenerates.
    #[error("not spacelike at node {node}: |u_xi| >= (1 - eps) u")]
    NotSpacelike {
        /// Index of the offending node.
        node: usize,
    },
    /// `u u_xixi + u^2 - 2 u_xi^2 <= eps_conv * u^2` at the given node: the
    /// curvature is no longer strictly positive and the inverse-curvature
    /// speed would blow up.
    #[error("convexity degenerates at node {node}: u u_xixi + u^2 - 2 u_xi^2 <= eps u^2")]
    DegenerateConvexity {
        /// Index of the offending node.
        node: usize,
    },
    /// The stable explicit step dropped below `1e-14`, signalling imminent
    /// degeneracy of the parabolic coefficient.
    #[error("stable step underflow: dt = {dt:e}")]
    StepUnderflow {
        /// The step size that underflowed.
        dt: f64,
    },
    /// A scalar argument is outside the admissible range (e.g. `alpha > 0`,
    /// or non-increasing record times).
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// A study run terminated before producing the error measure it needed.
    #[error("study run failed at refinement level {level}")]
    StudyFailed {
        /// Zero-based refinement level of the failed run.
        level: usize,
    },
}

/// A guard violation raised inside one of the four RK4 stage evaluations,
/// tagged with the stage (1..=4) at which it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("RK4 stage {stage}: {source}")]
pub struct StageError {
    /// Stage number, 1 through 4.
    pub stage: u8,
    /// The underlying guard violation.
    #[source]
    pub source: FlowError,
}
