//! Spatial discretization of the scalar flow equation.
//!
//! The graph function `u` (equivalently `phi = ln u`) satisfies
//!
//! ```text
//! du/dt = -v / (u^alpha k),        dphi/dt = Q = -e^{-alpha phi} v^4 / (v^2 + phi_xixi)
//! ```
//!
//! with `v^2 = 1 - phi_xi^2` and the Neumann condition `u_xi = 0` at both
//! endpoints. Everything here is expressed through the second-order central
//! stencils of `u` with ghost reflection (`u_{-1} = u_1`, `u_{n+1} = u_{n-1}`),
//! which realizes the Neumann condition exactly at the boundary nodes; the
//! `phi`-derivatives are obtained from the `u`-stencils by the chain rule
//! (`phi_xi = u_xi/u`, `phi_xixi = (u_xixi u - u_xi^2)/u^2`) so that all
//! algebraic identities between the `u`- and `phi`-forms hold to round-off,
//! not merely to truncation order.
//!
//! In `u`-variables the right-hand side and the parabolicity coefficient read
//!
//! ```text
//! Q  = -u^{-alpha} (P - S)^2 / (P (P - 2S + u u_xixi)),    P = u^2, S = u_xi^2,
//! dQ/dphi_xixi = u^{-alpha} (P - S)^2 / (P - 2S + u u_xixi)^2,
//! ```
//!
//! both evaluated as single fractions so nothing divides by `v^2` when the
//! graph runs close to the light cone.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatMath;

use crate::error::FlowError;
use crate::state::GraphState;

/// Time parametrization of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Integrate `du/dt = -v/(u^alpha k)` in physical time `t`.
    Physical,
    /// Integrate `du/ds = -v/(u^alpha k) + u` in slow time `s` (the flow of
    /// `u Theta^{-1}`).
    Rescaled,
}

/// Choice of the reference constant `c` in the radial barrier `Theta(t, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CRef {
    /// Midpoint rule `(inf phi_0 + sup phi_0)/2`, resolved against the
    /// initial data.
    Auto,
    /// A fixed value; must lie in `[inf phi_0, sup phi_0]`.
    Fixed(f64),
}

/// Relative guard margins for the admissibility checks.
///
/// `eps_space` keeps the tilt factor `v` away from zero without rejecting
/// legitimately near-null data; `eps_conv` keeps the parabolic coefficient
/// bounded without rejecting near-flat data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guards {
    /// Spacelike margin: reject when `|u_xi| >= (1 - eps_space) u`.
    pub eps_space: f64,
    /// Convexity margin: reject when `u u_xixi + u^2 - 2 u_xi^2 <= eps_conv u^2`.
    pub eps_conv: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards { eps_space: 1e-6, eps_conv: 1e-10 }
    }
}

/// Full configuration of a flow run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Anisotropy exponent `alpha <= 0`.
    pub alpha: f64,
    /// Left endpoint of the parameter interval.
    pub c: f64,
    /// Right endpoint of the parameter interval.
    pub d: f64,
    /// Number of grid intervals.
    pub n: usize,
    /// Physical or rescaled time parametrization.
    pub mode: Mode,
    /// Reference constant for the barrier `Theta(t, c_ref)`.
    pub c_ref: CRef,
    /// Fraction of the diffusive stability limit used per step, in `(0, 1)`.
    pub sigma_cfl: f64,
    /// Hard cap on the step size.
    pub dt_max: f64,
    /// Final time: `t_end` in physical mode, `s_end` in rescaled mode.
    pub end_time: f64,
    /// Admissibility guard margins.
    pub guards: Guards,
    /// Convergence tolerance for the rescaled flow (oscillation and velocity
    /// must both drop below it). Zero disables convergence detection.
    pub convergence_tol: f64,
    /// Record diagnostics every this many steps (plus the final step).
    pub snapshot_stride: usize,
    /// Verdict tolerance for envelope, time-derivative, and pinching bounds.
    pub tol_env: f64,
    /// Slack allowed in the discrete gradient maximum principle.
    pub tol_grad: f64,
}

impl FlowConfig {
    /// Configuration with the given essentials and the default stability,
    /// guard, and tolerance parameters.
    pub fn new(alpha: f64, c: f64, d: f64, n: usize, mode: Mode) -> Self {
        FlowConfig {
            alpha,
            c,
            d,
            n,
            mode,
            c_ref: CRef::Auto,
            sigma_cfl: 0.4,
            dt_max: 1.0,
            end_time: 1.0,
            guards: Guards::default(),
            convergence_tol: 1e-8,
            snapshot_stride: 100,
            tol_env: 1e-4,
            tol_grad: 1e-8,
        }
    }

    /// Checks every scalar range constraint.
    pub fn validate(&self) -> Result<(), FlowError> {
        if !self.alpha.is_finite() || self.alpha > 0.0 {
            return Err(FlowError::Domain("alpha must be <= 0"));
        }
        if !(self.d > self.c) {
            return Err(FlowError::Domain("domain requires c < d"));
        }
        if self.n < crate::state::MIN_INTERVALS {
            return Err(FlowError::Domain("grid requires at least 8 intervals"));
        }
        if !(self.sigma_cfl > 0.0 && self.sigma_cfl < 1.0) {
            return Err(FlowError::Domain("sigma_cfl must lie in (0, 1)"));
        }
        if !(self.dt_max > 0.0) {
            return Err(FlowError::Domain("dt_max must be positive"));
        }
        if !(self.end_time > 0.0) {
            return Err(FlowError::Domain("end time must be positive"));
        }
        if self.snapshot_stride == 0 {
            return Err(FlowError::Domain("snapshot_stride must be at least 1"));
        }
        if !(self.guards.eps_space > 0.0 && self.guards.eps_space < 1.0) {
            return Err(FlowError::Domain("eps_space must lie in (0, 1)"));
        }
        if !(self.guards.eps_conv > 0.0) {
            return Err(FlowError::Domain("eps_conv must be positive"));
        }
        if self.convergence_tol < 0.0 || self.tol_env < 0.0 || self.tol_grad < 0.0 {
            return Err(FlowError::Domain("tolerances must be non-negative"));
        }
        if let CRef::Fixed(v) = self.c_ref {
            if !v.is_finite() {
                return Err(FlowError::Domain("c_ref must be finite"));
            }
        }
        Ok(())
    }
}

/// The anisotropy factor `u^{-alpha}` with fast paths for the exponents that
/// appear throughout the verification suite.
#[derive(Debug, Clone, Copy)]
pub(crate) enum AnisoPow {
    /// `alpha = 0`: the factor is identically 1.
    One,
    /// `alpha = -1`: the factor is `u`.
    Linear,
    /// `alpha = -2`: the factor is `u^2`.
    Square,
    /// `alpha = -1/2`: the factor is `sqrt(u)`.
    SquareRoot,
    /// Any other exponent, via `powf(u, -alpha)`.
    General(f64),
}

impl AnisoPow {
    pub(crate) fn from_alpha(alpha: f64) -> Self {
        if alpha == 0.0 {
            AnisoPow::One
        } else if alpha == -1.0 {
            AnisoPow::Linear
        } else if alpha == -2.0 {
            AnisoPow::Square
        } else if alpha == -0.5 {
            AnisoPow::SquareRoot
        } else {
            AnisoPow::General(-alpha)
        }
    }

    /// `u^{-alpha}` for `u > 0`.
    #[inline]
    pub(crate) fn eval(self, u: f64) -> f64 {
        match self {
            AnisoPow::One => 1.0,
            AnisoPow::Linear => u,
            AnisoPow::Square => u * u,
            AnisoPow::SquareRoot => u.sqrt(),
            AnisoPow::General(p) => u.powf(p),
        }
    }
}

/// Per-node kernel shared by the right-hand sides and the diffusivity.
///
/// Returns `(Q, dQ/dphi_xixi)` or the guard violation at this node.
#[inline]
fn node_q(
    u_left: f64,
    u_mid: f64,
    u_right: f64,
    inv_2h: f64,
    inv_h2: f64,
    pow: AnisoPow,
    space2: f64,
    eps_conv: f64,
    node: usize,
) -> Result<(f64, f64), FlowError> {
    // A non-positive sample counts as not spacelike (|u_xi| >= (1-eps) u
    // holds vacuously); this also guards RK4 stage states against huge dt.
    if !(u_mid > 0.0) {
        return Err(FlowError::NotSpacelike { node });
    }
    let ux = (u_right - u_left) * inv_2h;
    // (right + left) - 2 mid keeps the stencil bit-symmetric under reflection.
    let uxx = (u_right + u_left - 2.0 * u_mid) * inv_h2;
    let p = u_mid * u_mid;
    let s = ux * ux;
    if s >= space2 * p {
        return Err(FlowError::NotSpacelike { node });
    }
    let denom = p - 2.0 * s + u_mid * uxx;
    if denom <= eps_conv * p {
        return Err(FlowError::DegenerateConvexity { node });
    }
    let g = p - s; // u^2 v^2
    let a = pow.eval(u_mid) * g * g;
    Ok((-a / (p * denom), a / (denom * denom)))
}

/// Runs the fused kernel over all nodes, writing `dphi/dt` (plus `1` in
/// rescaled form) into `out` and returning the maximum diffusivity.
pub(crate) fn eval_rhs(
    u: &[f64],
    h: f64,
    pow: AnisoPow,
    guards: Guards,
    add_one: bool,
    out: &mut [f64],
) -> Result<f64, FlowError> {
    debug_assert_eq!(u.len(), out.len());
    let n = u.len() - 1;
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    let space2 = (1.0 - guards.eps_space) * (1.0 - guards.eps_space);
    let eps_conv = guards.eps_conv;
    let shift = if add_one { 1.0 } else { 0.0 };

    // Ghost reflection: u_{-1} = u_1 and u_{n+1} = u_{n-1}.
    let (q0, d0) = node_q(u[1], u[0], u[1], inv_2h, inv_h2, pow, space2, eps_conv, 0)?;
    out[0] = q0 + shift;
    let mut dmax = d0;
    for (i, w) in u.windows(3).enumerate() {
        let (q, dq) = node_q(w[0], w[1], w[2], inv_2h, inv_h2, pow, space2, eps_conv, i + 1)?;
        out[i + 1] = q + shift;
        dmax = dmax.max(dq);
    }
    let (qn, dn) = node_q(u[n - 1], u[n], u[n - 1], inv_2h, inv_h2, pow, space2, eps_conv, n)?;
    out[n] = qn + shift;
    Ok(dmax.max(dn))
}

/// First and second `xi`-derivatives of `u` by second-order central
/// differences, with Neumann ghost reflection at both boundaries.
///
/// The reflection makes `u_xi` identically zero at the boundary nodes (the
/// discrete Neumann condition holds bit-exactly) and keeps `u_xixi`
/// second-order there.
pub fn spatial_derivatives(state: &GraphState) -> (Vec<f64>, Vec<f64>) {
    let u = state.u();
    let n = state.n();
    let h = state.h();
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    let mut ux = vec![0.0; n + 1];
    let mut uxx = vec![0.0; n + 1];
    for (i, w) in u.windows(3).enumerate() {
        ux[i + 1] = (w[2] - w[0]) * inv_2h;
        uxx[i + 1] = (w[2] + w[0] - 2.0 * w[1]) * inv_h2;
    }
    ux[0] = 0.0;
    ux[n] = 0.0;
    uxx[0] = 2.0 * (u[1] - u[0]) * inv_h2;
    uxx[n] = 2.0 * (u[n - 1] - u[n]) * inv_h2;
    (ux, uxx)
}

/// `dphi/dt` per node for the physical flow:
/// `Q = -e^{-alpha phi} v^4 / (v^2 + phi_xixi)`.
pub fn rhs_physical(state: &GraphState, cfg: &FlowConfig) -> Result<Vec<f64>, FlowError> {
    let mut out = vec![0.0; state.n() + 1];
    eval_rhs(
        state.u(),
        state.h(),
        AnisoPow::from_alpha(cfg.alpha),
        cfg.guards,
        false,
        &mut out,
    )?;
    Ok(out)
}

/// `dphi~/ds` per node for the rescaled flow: `Q~ + 1`, where `Q~` has the
/// same form as `Q` with the rescaled graph function in place of `phi`. The
/// unit hyperbola (`phi~ = 0`) is the fixed point: the output vanishes there
/// bit-exactly.
pub fn rhs_rescaled(state: &GraphState, cfg: &FlowConfig) -> Result<Vec<f64>, FlowError> {
    let mut out = vec![0.0; state.n() + 1];
    eval_rhs(
        state.u(),
        state.h(),
        AnisoPow::from_alpha(cfg.alpha),
        cfg.guards,
        true,
        &mut out,
    )?;
    Ok(out)
}

/// Maximum over nodes of the effective diffusivity
/// `dQ/dphi_xixi = e^{-alpha phi} v^4 / (v^2 + phi_xixi)^2`, the coefficient
/// bounding the stable explicit step. Strictly positive for admissible states.
pub fn diffusion_coefficient(state: &GraphState, cfg: &FlowConfig) -> Result<f64, FlowError> {
    let mut scratch = vec![0.0; state.n() + 1];
    eval_rhs(
        state.u(),
        state.h(),
        AnisoPow::from_alpha(cfg.alpha),
        cfg.guards,
        false,
        &mut scratch,
    )
}

/// Cheap admissibility probe: runs the guarded kernel once and discards the
/// values.
pub(crate) fn check_admissible(state: &GraphState, cfg: &FlowConfig) -> Result<(), FlowError> {
    diffusion_coefficient(state, cfg).map(|_| ())
}

/// Spacelike and convexity guards alone; the checks do not involve `alpha`.
pub(crate) fn guards_ok(u: &[f64], h: f64, guards: Guards) -> Result<(), FlowError> {
    let mut scratch = vec![0.0; u.len()];
    eval_rhs(u, h, AnisoPow::One, guards, false, &mut scratch).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alpha: f64, c: f64, d: f64, n: usize) -> FlowConfig {
        FlowConfig::new(alpha, c, d, n, Mode::Physical)
    }

    #[test]
    fn constant_state_has_vanishing_stencils() {
        let st = GraphState::constant(0.0, 1.0, 16, 3.0).unwrap();
        let (ux, uxx) = spatial_derivatives(&st);
        assert!(ux.iter().all(|&v| v == 0.0));
        assert!(uxx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn neumann_boundary_derivative_is_exactly_zero() {
        // Data with nonzero interior gradient; the ghost reflection still
        // forces u_xi = 0 at both ends, bit-exactly.
        let n = 32;
        let u: Vec<f64> = (0..=n)
            .map(|i| 2.0 + 0.3 * (core::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        let st = GraphState::new(0.0, 1.0, u).unwrap();
        let (ux, _) = spatial_derivatives(&st);
        assert_eq!(ux[0], 0.0);
        assert_eq!(ux[n], 0.0);
    }

    #[test]
    fn linear_profile_interior_derivative_is_exact() {
        // Dyadic grid so the node coordinates are exact binary fractions.
        let n = 8;
        let u: Vec<f64> = (0..=n).map(|i| 1.0 + i as f64 * 0.125).collect();
        let st = GraphState::new(1.0, 2.0, u).unwrap();
        let (ux, uxx) = spatial_derivatives(&st);
        for i in 1..n {
            assert_eq!(ux[i], 1.0);
            assert_eq!(uxx[i], 0.0);
        }
    }

    #[test]
    fn cosine_derivative_converges_at_second_order() {
        let err_at = |n: usize| -> f64 {
            let pi = core::f64::consts::PI;
            let u: Vec<f64> = (0..=n).map(|i| 3.0 + (pi * i as f64 / n as f64).cos()).collect();
            let st = GraphState::new(0.0, 1.0, u).unwrap();
            let (ux, _) = spatial_derivatives(&st);
            (1..n)
                .map(|i| (ux[i] + pi * (pi * st.xi(i)).sin()).abs())
                .fold(0.0, f64::max)
        };
        let e256 = err_at(256);
        let e512 = err_at(512);
        let ratio = e256 / e512;
        assert!((3.6..4.4).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn rhs_physical_on_radial_states() {
        // phi = 0, alpha = -1: Q = -1 exactly.
        let st = GraphState::constant(0.0, 1.0, 16, 1.0).unwrap();
        let q = rhs_physical(&st, &cfg(-1.0, 0.0, 1.0, 16)).unwrap();
        assert!(q.iter().all(|&v| v == -1.0));

        // phi = ln 2, alpha = -1: Q = -e^{-alpha phi} = -2 exactly.
        let st = GraphState::constant(0.0, 1.0, 16, 2.0).unwrap();
        let q = rhs_physical(&st, &cfg(-1.0, 0.0, 1.0, 16)).unwrap();
        assert!(q.iter().all(|&v| v == -2.0));
    }

    #[test]
    fn rhs_rescaled_on_radial_states() {
        let cfg_r = |a| FlowConfig::new(a, 0.0, 1.0, 16, Mode::Rescaled);

        // The unit hyperbola is the rescaled fixed point for every alpha.
        let st = GraphState::constant(0.0, 1.0, 16, 1.0).unwrap();
        for a in [0.0, -0.5, -1.0, -2.0, -1.7] {
            let q = rhs_rescaled(&st, &cfg_r(a)).unwrap();
            assert!(q.iter().all(|&v| v == 0.0), "alpha = {a}");
        }

        // phi~ = ln 2, alpha = -1: Q~ + 1 = -2 + 1 = -1.
        let st = GraphState::constant(0.0, 1.0, 16, 2.0).unwrap();
        let q = rhs_rescaled(&st, &cfg_r(-1.0)).unwrap();
        assert!(q.iter().all(|&v| v == -1.0));

        // phi~ = ln(1/2), alpha = -1: sub-unit states rise at +1/2.
        let st = GraphState::constant(0.0, 1.0, 16, 0.5).unwrap();
        let q = rhs_rescaled(&st, &cfg_r(-1.0)).unwrap();
        assert!(q.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn diffusion_coefficient_on_radial_states() {
        let st = GraphState::constant(0.0, 1.0, 16, 1.0).unwrap();
        assert_eq!(diffusion_coefficient(&st, &cfg(-1.0, 0.0, 1.0, 16)).unwrap(), 1.0);
        let st = GraphState::constant(0.0, 1.0, 16, 2.0).unwrap();
        assert_eq!(diffusion_coefficient(&st, &cfg(-1.0, 0.0, 1.0, 16)).unwrap(), 2.0);
    }

    #[test]
    fn diffusion_coefficient_is_grid_converged_on_cosine_data() {
        let pi = core::f64::consts::PI;
        let value_at = |n: usize| -> f64 {
            let u: Vec<f64> = (0..=n).map(|i| 2.0 + 0.1 * (pi * i as f64 / n as f64).cos()).collect();
            let st = GraphState::new(0.0, 1.0, u).unwrap();
            diffusion_coefficient(&st, &cfg(-1.0, 0.0, 1.0, n)).unwrap()
        };
        let v512 = value_at(512);
        let v1024 = value_at(1024);
        assert!(v512 > 0.0);
        assert!((v512 - v1024).abs() <= 1e-4, "gap = {}", (v512 - v1024).abs());
    }

    #[test]
    fn guards_reject_inadmissible_states() {
        // Steep profile: |u_xi| exceeds u somewhere in the interior.
        let n = 64;
        let u: Vec<f64> = (0..=n).map(|i| 0.2 + 2.0 * (i as f64 / n as f64)).collect();
        let st = GraphState::new(0.0, 1.0, u).unwrap();
        match rhs_physical(&st, &cfg(-1.0, 0.0, 1.0, n)) {
            Err(FlowError::NotSpacelike { .. }) => {}
            other => panic!("expected NotSpacelike, got {other:?}"),
        }

        // Concave bump: u u_xixi + u^2 - 2 u_xi^2 goes non-positive.
        let pi = core::f64::consts::PI;
        let u: Vec<f64> = (0..=n).map(|i| 2.0 + 1.2 * (pi * i as f64 / n as f64).cos()).collect();
        let st = GraphState::new(0.0, 1.0, u).unwrap();
        match rhs_physical(&st, &cfg(-1.0, 0.0, 1.0, n)) {
            Err(FlowError::DegenerateConvexity { .. }) => {}
            other => panic!("expected DegenerateConvexity, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_data_produces_symmetric_rhs() {
        let pi = core::f64::consts::PI;
        let n = 64;
        let u: Vec<f64> = (0..=n).map(|i| 2.0 + 0.1 * (pi * i as f64 / n as f64).cos().powi(2)).collect();
        let st = GraphState::new(0.0, 1.0, u).unwrap();
        let q = rhs_physical(&st, &cfg(-1.0, 0.0, 1.0, n)).unwrap();
        for i in 0..=n {
            assert_eq!(q[i], q[n - i], "asymmetry at node {i}");
        }
    }
}
