//! Anisotropic inverse mean curvature flow for spacelike radial graphs over an
//! arc of the unit hyperbola in the Lorentz-Minkowski plane.
//!
//! A spacelike curve written as a radial graph `u(xi) * (sinh xi, cosh xi)`,
//! `xi in [c, d]`, is evolved by the normal flow with speed `1/(|X|^alpha k)`
//! (`alpha <= 0`, `k` the Frenet curvature w.r.t. the past-directed timelike
//! normal) under the vanishing Neumann boundary condition `u_xi = 0` at both
//! endpoints. The crate provides
//!
//! * exact graph geometry on the hyperbola arc ([`lorentz`]), including an
//!   independent Frenet-polyline curvature oracle,
//! * the scalar flow right-hand sides, Neumann ghost stencils and the
//!   parabolicity coefficient used for step control ([`kernel`]),
//! * adaptive explicit RK4 time integration of the physical and rescaled flow
//!   ([`integrate`]),
//! * every closed-form barrier and bound the flow is known to obey — the
//!   radial solution `Theta`, C0 envelope, time-derivative and gradient
//!   bounds, curvature pinching, and the limit-radius interval ([`theory`]),
//! * per-step verification of those bounds ([`diagnostics`]) and reproducible
//!   convergence/sweep studies ([`harness`]).
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature and enable `libm` to build without the standard library. All types
//! are plain values and all operations are pure functions, so everything can
//! be moved freely across threads.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("imcf-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod kernel;
pub mod lorentz;
mod math;
pub mod state;
pub mod theory;

pub use diagnostics::{
    evaluate_invariants, length_ode_residual, oscillation_and_convergence, DiagnosticsRecord,
};
pub use error::{FlowError, StageError};
pub use harness::{
    alpha_sweep, convergence_order_study, scaling_covariance_check, simpson, InitialFamily,
    OrderRow, OrderStudy, StudyKind, StudySpec, SweepRow,
};
pub use integrate::{rk4_step, run_flow, stable_dt, RunResult, Termination};
pub use kernel::{
    diffusion_coefficient, rhs_physical, rhs_rescaled, spatial_derivatives, CRef, FlowConfig,
    Guards, Mode,
};
pub use lorentz::{
    curvature_frenet_oracle, curve_length, embed_graph, geometry_fields, hyperbola_point,
    minkowski_inner, GeometryFields, Point2L,
};
pub use state::GraphState;
pub use theory::{build_envelope, radius_interval, theta, time_map, TheoryEnvelope};
