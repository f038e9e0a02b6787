//! Per-step verification of every testable bound.
//!
//! Violations are reported as magnitudes rather than booleans so refinement
//! studies can confirm the `O(h^2 + dt)` scaling that separates
//! discretization error from a genuine counterexample. The time derivative
//! entering the bounds is the right-hand side evaluated at the recorded state
//! (exact for the semi-discrete system), not a finite difference of stored
//! values.
//!
//! In rescaled mode the same bounds are checked in rescaled units: the
//! C0 envelope becomes the barrier ratio `Theta(t, phi_i)/Theta(t, c_ref)`,
//! the curvature of the rescaled state *is* `k Theta`, and the right-hand
//! side of the physical flow evaluated on the rescaled state *is*
//! `dphi/dt * Theta^alpha`, so no clock conversions enter the verdicts.


#[cfg(not(feature = "std"))]
use crate::math::FloatMath;

use crate::error::FlowError;
use crate::kernel::{rhs_physical, rhs_rescaled, spatial_derivatives, AnisoPow, FlowConfig, Mode};
use crate::lorentz::{curve_length, geometry_fields};
use crate::state::GraphState;
use crate::theory::{
    envelope_ratio_rescaled, inverse_time_map, theta, theta_pow_alpha, time_map, TheoryEnvelope,
};

/// Scalar summaries and invariant verdicts for one recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    /// Step index within the run.
    pub step: u64,
    /// Physical time.
    pub t: f64,
    /// Rescaled (slow) time.
    pub s: f64,
    /// Smallest node value of the recorded state.
    pub u_min: f64,
    /// Largest node value of the recorded state.
    pub u_max: f64,
    /// `max |D phi|` over nodes.
    pub grad_phi_max: f64,
    /// Smallest curvature.
    pub k_min: f64,
    /// Largest curvature.
    pub k_max: f64,
    /// Smallest `k Theta`.
    pub k_theta_min: f64,
    /// Largest `k Theta`.
    pub k_theta_max: f64,
    /// Curve length of the recorded state.
    pub length: f64,
    /// Residual of the first-variation length ODE (physical mode; filled by
    /// the runner for records with both neighbors, otherwise zero).
    pub length_ode_residual: f64,
    /// Oscillation `max - min` of the rescaled graph function.
    pub osc_rescaled: f64,
    /// Largest signed excursion outside the C0 envelope (0 if contained).
    pub env_violation: f64,
    /// Largest excursion of `dphi/dt * Theta^alpha` outside its bounds.
    pub phidot_violation: f64,
    /// `max |Phi/w - (-dphi/dt)|`, the support-function identity gap.
    pub psi_identity_gap: f64,
    /// Conjunction of all per-step verdicts at the configured tolerances.
    pub all_ok: bool,
}

/// Evaluates every invariant of `state` against the envelope built from the
/// run's initial data. The state must be admissible.
pub fn evaluate_invariants(
    state: &GraphState,
    env: &TheoryEnvelope,
    cfg: &FlowConfig,
) -> Result<DiagnosticsRecord, FlowError> {
    let gf = geometry_fields(state, cfg.alpha, cfg.guards)?;
    let q = rhs_physical(state, cfg)?;
    let u = state.u();
    let n = state.n();

    let u_min = state.u_min();
    let u_max = state.u_max();
    let mut grad: f64 = 0.0;
    let mut k_min = f64::INFINITY;
    let mut k_max = f64::NEG_INFINITY;
    let mut psi_gap: f64 = 0.0;
    let mut m_min = f64::INFINITY;
    let mut m_max = f64::NEG_INFINITY;
    for i in 0..=n {
        grad = grad.max((gf.u_xi[i] / u[i]).abs());
        k_min = k_min.min(gf.k[i]);
        k_max = k_max.max(gf.k[i]);
        // Phi/w = -dphi/dt is pure per-node algebra; the gap is round-off.
        psi_gap = psi_gap.max((gf.speed[i] / gf.w_support[i] + q[i]).abs());
        m_min = m_min.min(q[i]);
        m_max = m_max.max(q[i]);
    }
    let length = curve_length(state)?;

    let (t, s, env_violation, k_theta_min, k_theta_max, phidot_lo_rec, phidot_hi_rec, osc) =
        match cfg.mode {
            Mode::Physical => {
                let t = state.t();
                let s = time_map(t, env.c_ref, cfg.alpha)?;
                let th1 = theta(t, env.phi1, cfg.alpha)?;
                let th2 = theta(t, env.phi2, cfg.alpha)?;
                let th_ref = theta(t, env.c_ref, cfg.alpha)?;
                let th_pow = theta_pow_alpha(t, env.c_ref, cfg.alpha);
                let viol = u
                    .iter()
                    .map(|&ui| (th1 - ui).max(ui - th2))
                    .fold(0.0, f64::max);
                (
                    t,
                    s,
                    viol,
                    k_min * th_ref,
                    k_max * th_ref,
                    m_min * th_pow,
                    m_max * th_pow,
                    (u_max - u_min) / th_ref,
                )
            }
            Mode::Rescaled => {
                let s = state.s();
                let t = inverse_time_map(s, env.c_ref, cfg.alpha);
                let ratio1 = envelope_ratio_rescaled(s, env.phi1, env.c_ref, cfg.alpha);
                let ratio2 = envelope_ratio_rescaled(s, env.phi2, env.c_ref, cfg.alpha);
                let viol = u
                    .iter()
                    .map(|&ui| (ratio1 - ui).max(ui - ratio2))
                    .fold(0.0, f64::max);
                // The rescaled curvature is k Theta, and the physical-form
                // right-hand side on the rescaled state is dphi/dt Theta^alpha.
                (t, s, viol, k_min, k_max, m_min, m_max, u_max - u_min)
            }
        };

    let env_violation = env_violation.max(0.0);
    let phidot_violation = (env.phidot_lo - phidot_lo_rec)
        .max(phidot_hi_rec - env.phidot_hi)
        .max(0.0);

    let all_ok = env_violation <= cfg.tol_env
        && phidot_violation <= cfg.tol_env
        && grad <= env.grad0 + cfg.tol_grad
        && k_theta_min >= env.k_theta_lo - cfg.tol_env
        && k_theta_max <= env.k_theta_hi + cfg.tol_env;

    Ok(DiagnosticsRecord {
        step: 0,
        t,
        s,
        u_min,
        u_max,
        grad_phi_max: grad,
        k_min,
        k_max,
        k_theta_min,
        k_theta_max,
        length,
        length_ode_residual: 0.0,
        osc_rescaled: osc,
        env_violation,
        phidot_violation,
        psi_identity_gap: psi_gap,
        all_ok,
    })
}

/// Trapezoid quadrature of `integral u^{-alpha} dH^1 =
/// integral u^{-alpha} sqrt(u^2 - u_xi^2) dxi`, the right-hand side of the
/// first-variation length ODE `dL/dt = -integral u^{-alpha} dH^1`.
pub(crate) fn length_flux(state: &GraphState, cfg: &FlowConfig) -> Result<f64, FlowError> {
    let (u_xi, _) = spatial_derivatives(state);
    let pow = AnisoPow::from_alpha(cfg.alpha);
    let n = state.n();
    let mut acc = 0.0;
    for (i, (&u, &ux)) in state.u().iter().zip(u_xi.iter()).enumerate() {
        if ux.abs() >= (1.0 - cfg.guards.eps_space) * u {
            return Err(FlowError::NotSpacelike { node: i });
        }
        let f = pow.eval(u) * (u * u - ux * ux).sqrt();
        acc += if i == 0 || i == n { 0.5 * f } else { f };
    }
    Ok(acc * state.h())
}

/// Residual of the length ODE between two consecutive records:
/// `|(L_next - L_prev)/(t_next - t_prev) + integral u^{-alpha} dH^1|` with the
/// flux taken at the midpoint state (centered differencing). Physical mode.
pub fn length_ode_residual(
    prev: &DiagnosticsRecord,
    next: &DiagnosticsRecord,
    state_mid: &GraphState,
    cfg: &FlowConfig,
) -> Result<f64, FlowError> {
    if !(next.t > prev.t) {
        return Err(FlowError::Domain("records must have increasing times"));
    }
    let flux = length_flux(state_mid, cfg)?;
    Ok(((next.length - prev.length) / (next.t - prev.t) + flux).abs())
}

/// Convergence functionals of the rescaled flow: the oscillation
/// `max u~ - min u~`, the velocity `max |du~/ds| / u~` in `phi`-form
/// (`max |rhs_rescaled|`), and whether both sit below `cfg.convergence_tol`.
pub fn oscillation_and_convergence(
    state: &GraphState,
    cfg: &FlowConfig,
) -> Result<(f64, f64, bool), FlowError> {
    let osc = state.u_max() - state.u_min();
    let q = rhs_rescaled(state, cfg)?;
    let velocity = q.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let converged = osc < cfg.convergence_tol && velocity < cfg.convergence_tol;
    Ok((osc, velocity, converged))
}

/// Largest `|Phi/w - (-dphi/dt)|` over the series (all records must already
/// carry it; convenience for suite assertions).
pub fn max_psi_gap(series: &[DiagnosticsRecord]) -> f64 {
    series.iter().map(|r| r.psi_identity_gap).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{CRef, FlowConfig, Mode};
    use crate::theory::build_envelope;
    use alloc::vec::Vec;

    fn radial_cfg(alpha: f64, n: usize) -> FlowConfig {
        FlowConfig::new(alpha, 0.0, 1.0, n, Mode::Physical)
    }

    /// Spatially constant state following the exact radial solution at time t.
    fn radial_state(r: f64, alpha: f64, t: f64, n: usize) -> GraphState {
        let u = theta(t, r.ln(), alpha).unwrap();
        GraphState::constant(0.0, 1.0, n, u).unwrap().with_clocks(t, 0.0).unwrap()
    }

    #[test]
    fn radial_states_sit_exactly_on_the_barriers() {
        let cfg = radial_cfg(-1.0, 32);
        let u0 = GraphState::constant(0.0, 1.0, 32, 2.0).unwrap();
        let env = build_envelope(&u0, &cfg).unwrap();
        for &t in &[0.0, 0.5, 2.0] {
            let st = radial_state(2.0, -1.0, t, 32);
            let rec = evaluate_invariants(&st, &env, &cfg).unwrap();
            assert!(rec.env_violation <= 1e-12, "env {:e}", rec.env_violation);
            assert!(rec.phidot_violation <= 1e-12, "phidot {:e}", rec.phidot_violation);
            assert_eq!(rec.osc_rescaled, 0.0);
            assert!(rec.psi_identity_gap <= 1e-12, "psi {:e}", rec.psi_identity_gap);
            assert!(rec.all_ok);
        }
    }

    #[test]
    fn rescaled_fixed_point_record() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 32, Mode::Rescaled);
        cfg.c_ref = CRef::Fixed(0.0);
        let u0 = GraphState::constant(0.0, 1.0, 32, 1.0).unwrap();
        let env = build_envelope(&u0, &cfg).unwrap();
        let rec = evaluate_invariants(&u0, &env, &cfg).unwrap();
        assert_eq!(rec.osc_rescaled, 0.0);
        assert_eq!(rec.grad_phi_max, 0.0);
        assert!(rec.all_ok);
    }

    #[test]
    fn oscillation_and_convergence_on_constant_states() {
        let cfg = FlowConfig::new(-1.0, 0.0, 1.0, 32, Mode::Rescaled);

        let st = GraphState::constant(0.0, 1.0, 32, 1.0).unwrap();
        let (osc, vel, conv) = oscillation_and_convergence(&st, &cfg).unwrap();
        assert_eq!((osc, vel, conv), (0.0, 0.0, true));

        // Constant but not stationary: |Q~ + 1| = |-2 + 1| = 1 for alpha = -1.
        let st = GraphState::constant(0.0, 1.0, 32, 2.0).unwrap();
        let (osc, vel, conv) = oscillation_and_convergence(&st, &cfg).unwrap();
        assert_eq!((osc, vel, conv), (0.0, 1.0, false));
    }

    #[test]
    fn length_ode_residual_on_radial_solutions() {
        // f'(t) = -integral u^{-alpha} dH^1; for radial data both sides are
        // closed-form, so centered differencing leaves only O(delta^2).
        let delta = 1e-4;
        for &alpha in &[-1.0, 0.0] {
            let cfg = radial_cfg(alpha, 64);
            let u0 = GraphState::constant(0.0, 1.0, 64, 2.0).unwrap();
            let env = build_envelope(&u0, &cfg).unwrap();
            let t = 0.5;
            let prev = evaluate_invariants(&radial_state(2.0, alpha, t - delta, 64), &env, &cfg)
                .unwrap();
            let next = evaluate_invariants(&radial_state(2.0, alpha, t + delta, 64), &env, &cfg)
                .unwrap();
            let mid = radial_state(2.0, alpha, t, 64);
            let res = length_ode_residual(&prev, &next, &mid, &cfg).unwrap();
            assert!(res <= 1e-6, "alpha = {alpha}: residual = {res:e}");
        }
    }

    #[test]
    fn length_ode_residual_requires_increasing_times() {
        let cfg = radial_cfg(-1.0, 64);
        let u0 = GraphState::constant(0.0, 1.0, 64, 2.0).unwrap();
        let env = build_envelope(&u0, &cfg).unwrap();
        let rec = evaluate_invariants(&u0, &env, &cfg).unwrap();
        assert!(matches!(
            length_ode_residual(&rec, &rec, &u0, &cfg),
            Err(FlowError::Domain(_))
        ));
    }

    #[test]
    fn psi_identity_gap_on_cosine_data() {
        let pi = core::f64::consts::PI;
        for &alpha in &[-2.0, -1.0, -0.5, 0.0, -1.3] {
            let n = 128;
            let u: Vec<f64> =
                (0..=n).map(|i| 2.0 + 0.1 * (pi * i as f64 / n as f64).cos()).collect();
            let st = GraphState::new(0.0, 1.0, u).unwrap();
            let cfg = radial_cfg(alpha, n);
            let env = build_envelope(&st, &cfg).unwrap();
            let rec = evaluate_invariants(&st, &env, &cfg).unwrap();
            assert!(
                rec.psi_identity_gap <= 1e-12,
                "alpha = {alpha}: gap = {:e}",
                rec.psi_identity_gap
            );
        }
    }
}
