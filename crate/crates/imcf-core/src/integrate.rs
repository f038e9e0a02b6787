//! Adaptive explicit time integration of the physical or rescaled flow.
//!
//! Classical RK4 with the diffusive step bound
//! `dt = min(dt_max, sigma_cfl h^2 / max dQ/dphi_xixi)`, re-evaluated every
//! step because the diffusivity grows as the solution collapses. All four
//! stage evaluations go through the guarded kernel, so the Neumann ghosts are
//! re-enforced and a spacelike or convexity failure is caught at the stage
//! where it appears. On a guard violation the run returns the last valid
//! state with a [`Termination::GuardViolation`] verdict instead of erroring,
//! so diagnostics can localize the failure.
//!
//! The prognostic variable is `u` itself, stepped through
//! `du/dt = u * Q(u)` (equivalently `du/ds = u * (Q~ + 1)`); the kernel
//! reports the right-hand side in `phi`-form and the stage update multiplies
//! by the stage value of `u`. Physical runs stop at `t_end`; only rescaled
//! runs attempt convergence detection, since physical solutions collapse to
//! `u -> 0`. Convergence requires both a small oscillation and a small
//! velocity, and on convergence the limit radius is reported as
//! `exp(mean ln u~)`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatMath;

use crate::diagnostics::{evaluate_invariants, length_flux, DiagnosticsRecord};
use crate::error::{FlowError, StageError};
use crate::kernel::{check_admissible, diffusion_coefficient, eval_rhs, AnisoPow, FlowConfig, Mode};
use crate::lorentz::curve_length;
use crate::state::GraphState;
use crate::theory::{build_envelope, inverse_time_map, time_map};

/// Step size below which the stable explicit step is considered to have
/// underflowed (imminent degeneracy of the parabolic coefficient).
pub const DT_UNDERFLOW: f64 = 1e-14;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached `t_end` (physical) or `s_end` (rescaled).
    ReachedEnd,
    /// Rescaled oscillation and velocity both fell below the tolerance.
    Converged,
    /// A spacelike or convexity guard tripped; the last valid state is
    /// returned.
    GuardViolation,
    /// The stable step underflowed.
    StepUnderflow,
}

/// Outcome of [`run_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// State at the final accepted step (rescaled units in rescaled mode).
    pub final_state: GraphState,
    /// Diagnostics at step 0, every `snapshot_stride` steps, and the final
    /// step; timestamps strictly increasing.
    pub series: Vec<DiagnosticsRecord>,
    /// Limit radius `exp(mean ln u~)`; present iff the run converged in
    /// rescaled mode.
    pub r_infinity: Option<f64>,
    /// Why the run stopped.
    pub termination: Termination,
}

/// The largest stable explicit step from the current state:
/// `min(dt_max, sigma_cfl h^2 / diffusion_coefficient)`.
pub fn stable_dt(state: &GraphState, cfg: &FlowConfig) -> Result<f64, FlowError> {
    let d = diffusion_coefficient(state, cfg)?;
    let h = state.h();
    let dt = cfg.dt_max.min(cfg.sigma_cfl * h * h / d);
    if dt < DT_UNDERFLOW {
        return Err(FlowError::StepUnderflow { dt });
    }
    Ok(dt)
}

/// Scratch buffers reused across steps.
struct RkWorkspace {
    q: Vec<f64>,
    k: Vec<f64>,
    stage: Vec<f64>,
    acc: Vec<f64>,
}

impl RkWorkspace {
    fn new(len: usize) -> Self {
        RkWorkspace {
            q: vec![0.0; len],
            k: vec![0.0; len],
            stage: vec![0.0; len],
            acc: vec![0.0; len],
        }
    }
}

/// Advances `u` by one RK4 step of `du/dt = u * q`, with the stage-1
/// right-hand side `q1` already evaluated at `u`.
fn advance_with_q1(
    u: &mut [f64],
    q1: &[f64],
    dt: f64,
    h: f64,
    pow: AnisoPow,
    cfg: &FlowConfig,
    ws: &mut RkWorkspace,
) -> Result<(), StageError> {
    let add_one = cfg.mode == Mode::Rescaled;
    let half = 0.5 * dt;

    for i in 0..u.len() {
        let k1 = u[i] * q1[i];
        ws.acc[i] = k1;
        ws.stage[i] = u[i] + half * k1;
    }
    eval_rhs(&ws.stage, h, pow, cfg.guards, add_one, &mut ws.q)
        .map_err(|source| StageError { stage: 2, source })?;
    for i in 0..u.len() {
        let k2 = ws.stage[i] * ws.q[i];
        ws.k[i] = k2;
        ws.acc[i] += 2.0 * k2;
        ws.stage[i] = u[i] + half * k2;
    }
    eval_rhs(&ws.stage, h, pow, cfg.guards, add_one, &mut ws.q)
        .map_err(|source| StageError { stage: 3, source })?;
    for i in 0..u.len() {
        let k3 = ws.stage[i] * ws.q[i];
        ws.k[i] = k3;
        ws.acc[i] += 2.0 * k3;
        ws.stage[i] = u[i] + dt * k3;
    }
    eval_rhs(&ws.stage, h, pow, cfg.guards, add_one, &mut ws.q)
        .map_err(|source| StageError { stage: 4, source })?;
    let sixth = dt / 6.0;
    for i in 0..u.len() {
        ws.acc[i] += ws.stage[i] * ws.q[i];
        u[i] += sixth * ws.acc[i];
    }
    Ok(())
}

/// One classical RK4 step of the configured flow, advancing `t` (physical) or
/// `s` (rescaled) by `dt`. Stage guard violations are tagged with the stage.
pub fn rk4_step(state: &GraphState, cfg: &FlowConfig, dt: f64) -> Result<GraphState, StageError> {
    let pow = AnisoPow::from_alpha(cfg.alpha);
    let add_one = cfg.mode == Mode::Rescaled;
    let h = state.h();
    let mut u = state.u().to_vec();
    let mut ws = RkWorkspace::new(u.len());

    eval_rhs(state.u(), h, pow, cfg.guards, add_one, &mut ws.q)
        .map_err(|source| StageError { stage: 1, source })?;
    let q1 = core::mem::take(&mut ws.q);
    ws.q = vec![0.0; u.len()];
    advance_with_q1(&mut u, &q1, dt, h, pow, cfg, &mut ws)?;

    let mut out = state.clone();
    out.set_u(u);
    match cfg.mode {
        Mode::Physical => out.set_t(state.t() + dt),
        Mode::Rescaled => out.set_s(state.s() + dt),
    }
    Ok(out)
}

/// Bookkeeping for the centered length-ODE residual of one record.
struct PendingResidual {
    rec_idx: usize,
    t_before: f64,
    len_before: f64,
    t_at: f64,
    flux_mid: f64,
}

/// Integrates the flow from `initial` until `end_time`, rescaled convergence,
/// a guard violation, or step underflow — whichever comes first.
///
/// `initial` is always the *physical* data; in rescaled mode it is divided by
/// `Theta(0, c_ref) = e^{c_ref}` internally and the returned states are the
/// rescaled ones. Diagnostics are recorded at step 0, every
/// `snapshot_stride` steps, and at the final step; physical-mode records with
/// both one-step neighbors carry the centered length-ODE residual.
///
/// Errors are reserved for malformed configuration; guard violations on the
/// initial data or during stepping terminate the run with the corresponding
/// [`Termination`] instead.
pub fn run_flow(initial: &GraphState, cfg: &FlowConfig) -> Result<RunResult, FlowError> {
    cfg.validate()?;
    if initial.n() != cfg.n || initial.c() != cfg.c || initial.d() != cfg.d {
        return Err(FlowError::Domain("state grid does not match configuration"));
    }

    let guard_stop = |state: GraphState, series: Vec<DiagnosticsRecord>, term: Termination| {
        Ok(RunResult { final_state: state, series, r_infinity: None, termination: term })
    };

    // Envelope construction runs the guarded kernel on the initial data, so
    // inadmissible input is reported as a step-0 guard violation.
    let env = match build_envelope(initial, cfg) {
        Ok(env) => env,
        Err(FlowError::NotSpacelike { .. } | FlowError::DegenerateConvexity { .. }) => {
            return guard_stop(initial.clone(), Vec::new(), Termination::GuardViolation);
        }
        Err(e) => return Err(e),
    };

    let mut state = initial.clone();
    if cfg.mode == Mode::Rescaled {
        let scale = (-env.c_ref).exp();
        let u: Vec<f64> = initial.u().iter().map(|&v| v * scale).collect();
        state.set_u(u);
    }
    debug_assert!(check_admissible(&state, cfg).is_ok());

    let pow = AnisoPow::from_alpha(cfg.alpha);
    let h = state.h();
    let n = state.n();
    let mut ws = RkWorkspace::new(n + 1);
    let mut q1 = vec![0.0; n + 1];
    let mut series: Vec<DiagnosticsRecord> = Vec::new();
    let mut step: u64 = 0;
    let mut clock = 0.0;
    let recorded_at = |series: &mut Vec<DiagnosticsRecord>,
                       state: &GraphState,
                       step: u64|
     -> Result<(), FlowError> {
        let mut rec = evaluate_invariants(state, &env, cfg)?;
        rec.step = step;
        series.push(rec);
        Ok(())
    };
    recorded_at(&mut series, &state, 0)?;
    let mut pending: Option<PendingResidual> = None;
    let add_one = cfg.mode == Mode::Rescaled;

    let termination = loop {
        // Stage-1 evaluation doubles as the guard probe, the CFL bound, and
        // (in rescaled mode) the convergence velocity.
        let diffusivity = match eval_rhs(state.u(), h, pow, cfg.guards, add_one, &mut q1) {
            Ok(d) => d,
            Err(_) => break Termination::GuardViolation,
        };

        if cfg.mode == Mode::Rescaled && cfg.convergence_tol > 0.0 {
            let osc = state.u_max() - state.u_min();
            let velocity = q1.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if osc < cfg.convergence_tol && velocity < cfg.convergence_tol {
                break Termination::Converged;
            }
        }

        let remaining = cfg.end_time - clock;
        if remaining <= 0.0 {
            break Termination::ReachedEnd;
        }

        let dt_stable = cfg.dt_max.min(cfg.sigma_cfl * h * h / diffusivity);
        if dt_stable < DT_UNDERFLOW {
            break Termination::StepUnderflow;
        }
        let clamped = dt_stable >= remaining;
        let dt = if clamped { remaining } else { dt_stable };

        // Stash (t, L) one step ahead of a record so the residual can use a
        // centered difference around it.
        let next_is_record = cfg.mode == Mode::Physical && (step + 1) % cfg.snapshot_stride as u64 == 0;
        let stash = if next_is_record {
            match curve_length(&state) {
                Ok(len) => Some((clock, len)),
                Err(_) => break Termination::GuardViolation,
            }
        } else {
            None
        };

        let mut u = state.u().to_vec();
        if advance_with_q1(&mut u, &q1, dt, h, pow, cfg, &mut ws).is_err() {
            break Termination::GuardViolation;
        }
        state.set_u(u);
        clock = if clamped { cfg.end_time } else { clock + dt };
        match cfg.mode {
            Mode::Physical => state.set_t(clock),
            Mode::Rescaled => state.set_s(clock),
        }
        step += 1;

        // Fill the residual of the previous record now that its one-step
        // successor exists. The derivative uses the non-uniform three-point
        // formula (plain centered differencing when the steps are equal). A
        // clamped sliver of a final step would amplify length round-off
        // through the 1/d2 weight, so such records keep residual zero.
        if let Some(p) = pending.take() {
            let d1 = p.t_at - p.t_before;
            let d2 = clock - p.t_at;
            if d2 >= 0.1 * d1 {
                let len_now = match curve_length(&state) {
                    Ok(len) => len,
                    Err(_) => break Termination::GuardViolation,
                };
                let len_at = series[p.rec_idx].length;
                let slope = d1 / (d2 * (d1 + d2)) * len_now
                    + (d2 - d1) / (d1 * d2) * len_at
                    - d2 / (d1 * (d1 + d2)) * p.len_before;
                series[p.rec_idx].length_ode_residual = (slope + p.flux_mid).abs();
            }
        }

        if step % cfg.snapshot_stride as u64 == 0 {
            if recorded_at(&mut series, &state, step).is_err() {
                break Termination::GuardViolation;
            }
            if let Some((t_before, len_before)) = stash {
                let flux_mid = match length_flux(&state, cfg) {
                    Ok(f) => f,
                    Err(_) => break Termination::GuardViolation,
                };
                pending = Some(PendingResidual {
                    rec_idx: series.len() - 1,
                    t_before,
                    len_before,
                    t_at: clock,
                    flux_mid,
                });
            }
        }
    };

    // Final record, unless the loop already recorded this step.
    if series.last().map(|r| r.step) != Some(step) {
        if let Ok(mut rec) = evaluate_invariants(&state, &env, cfg) {
            rec.step = step;
            series.push(rec);
        }
    }

    // Keep both clocks coherent on the returned state.
    match cfg.mode {
        Mode::Physical => {
            if let Ok(s) = time_map(state.t(), env.c_ref, cfg.alpha) {
                state.set_s(s);
            }
        }
        Mode::Rescaled => state.set_t(inverse_time_map(state.s(), env.c_ref, cfg.alpha)),
    }

    let r_infinity = if termination == Termination::Converged {
        let mean_phi =
            state.u().iter().map(|&v| v.ln()).sum::<f64>() / (state.n() + 1) as f64;
        Some(mean_phi.exp())
    } else {
        None
    };

    Ok(RunResult { final_state: state, series, r_infinity, termination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Guards;
    use crate::theory::theta;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stable_dt_arithmetic() {
        // phi = 0, alpha = -1, h = 0.01, sigma = 0.4, dt_max = 1: dt = 4e-5.
        let st = GraphState::constant(0.0, 1.0, 100, 1.0).unwrap();
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 100, Mode::Physical);
        assert_abs_diff_eq!(stable_dt(&st, &cfg).unwrap(), 4e-5, epsilon = 1e-18);

        // Doubling the diffusivity halves the step.
        let st2 = GraphState::constant(0.0, 1.0, 100, 2.0).unwrap();
        assert_abs_diff_eq!(stable_dt(&st2, &cfg).unwrap(), 2e-5, epsilon = 1e-18);

        // dt_max clamps on coarse grids.
        cfg.dt_max = 1e-6;
        cfg.n = 10;
        let st3 = GraphState::constant(0.0, 1.0, 10, 1.0).unwrap();
        assert_eq!(stable_dt(&st3, &cfg).unwrap(), 1e-6);

        cfg.dt_max = 1e-15;
        assert!(matches!(
            stable_dt(&st3, &cfg),
            Err(FlowError::StepUnderflow { .. })
        ));
    }

    #[test]
    fn rk4_step_reproduces_the_radial_ode() {
        // alpha = -1, u0 = 2: u(t) = 1/(t + 1/2), phi(t) = -ln(t + 1/2).
        let cfg = FlowConfig::new(-1.0, 0.0, 1.0, 16, Mode::Physical);
        let st = GraphState::constant(0.0, 1.0, 16, 2.0).unwrap();
        let dt = 0.01;
        let next = rk4_step(&st, &cfg, dt).unwrap();
        let exact = -(dt + 0.5_f64).ln();
        for &u in next.u() {
            assert!((u.ln() - exact).abs() <= 10.0 * dt.powi(5));
        }
        assert_eq!(next.t(), dt);
    }

    #[test]
    fn rescaled_fixed_point_is_bit_stable() {
        let cfg = FlowConfig::new(-1.3, 0.0, 1.0, 32, Mode::Rescaled);
        let st = GraphState::constant(0.0, 1.0, 32, 1.0).unwrap();
        let next = rk4_step(&st, &cfg, 0.05).unwrap();
        assert_eq!(st.u(), next.u());
    }

    #[test]
    fn symmetric_data_stays_bit_symmetric_for_1000_steps() {
        let pi = core::f64::consts::PI;
        let n = 64;
        let mut u: Vec<f64> =
            (0..=n).map(|i| 2.0 + 0.1 * (pi * i as f64 / n as f64).cos().powi(2)).collect();
        for i in 0..=n / 2 {
            u[n - i] = u[i];
        }
        let mut st = GraphState::new(0.0, 1.0, u).unwrap();
        let cfg = FlowConfig::new(-1.0, 0.0, 1.0, n, Mode::Physical);
        for _ in 0..1000 {
            let dt = stable_dt(&st, &cfg).unwrap();
            st = rk4_step(&st, &cfg, dt).unwrap();
        }
        let worst = (0..=n)
            .map(|i| (st.u()[i] - st.u()[n - i]).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "asymmetry = {worst:e}");
    }

    #[test]
    fn radial_run_matches_the_barrier() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 64, Mode::Physical);
        cfg.end_time = 1.0;
        let st = GraphState::constant(0.0, 1.0, 64, 2.0).unwrap();
        let res = run_flow(&st, &cfg).unwrap();
        assert_eq!(res.termination, Termination::ReachedEnd);
        assert_eq!(res.final_state.t(), 1.0);
        let exact = theta(1.0, 2.0_f64.ln(), -1.0).unwrap();
        for &u in res.final_state.u() {
            assert!((u - exact).abs() <= 1e-8, "err = {:e}", (u - exact).abs());
        }
        // Timestamps strictly increase along the series.
        for w in res.series.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn constant_rescaled_run_converges_to_unit_radius() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 64, Mode::Rescaled);
        cfg.end_time = 50.0;
        for r in [0.5, 2.0, 7.0] {
            let st = GraphState::constant(0.0, 1.0, 64, r).unwrap();
            let res = run_flow(&st, &cfg).unwrap();
            assert_eq!(res.termination, Termination::Converged);
            let r_inf = res.r_infinity.unwrap();
            assert!((r_inf - 1.0).abs() <= 1e-6, "r = {r}: r_inf = {r_inf}");
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let pi = core::f64::consts::PI;
        let n = 64;
        let u: Vec<f64> = (0..=n).map(|i| 2.0 + 0.1 * (pi * i as f64 / n as f64).cos()).collect();
        let st = GraphState::new(0.0, 1.0, u).unwrap();
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, n, Mode::Physical);
        cfg.end_time = 0.2;
        cfg.snapshot_stride = 50;
        let a = run_flow(&st, &cfg).unwrap();
        let b = run_flow(&st, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inadmissible_initial_data_terminates_at_step_zero() {
        let pi = core::f64::consts::PI;
        let n = 64;
        let u: Vec<f64> = (0..=n).map(|i| 2.0 + 1.2 * (pi * i as f64 / n as f64).cos()).collect();
        let st = GraphState::new(0.0, 1.0, u).unwrap();
        let cfg = FlowConfig::new(-1.0, 0.0, 1.0, n, Mode::Physical);
        let res = run_flow(&st, &cfg).unwrap();
        assert_eq!(res.termination, Termination::GuardViolation);
        assert!(res.series.is_empty());
        assert!(res.r_infinity.is_none());
    }

    #[test]
    fn dt_underflow_is_reported() {
        let st = GraphState::constant(0.0, 1.0, 32, 2.0).unwrap();
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 32, Mode::Physical);
        cfg.dt_max = 1e-15;
        let res = run_flow(&st, &cfg).unwrap();
        assert_eq!(res.termination, Termination::StepUnderflow);
    }

    #[test]
    fn guards_carry_through_config() {
        // A custom eps_space close to 1 rejects even mild slopes.
        let pi = core::f64::consts::PI;
        let n = 64;
        let u: Vec<f64> = (0..=n).map(|i| 2.0 + 0.1 * (pi * i as f64 / n as f64).cos()).collect();
        let st = GraphState::new(0.0, 1.0, u).unwrap();
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, n, Mode::Physical);
        cfg.guards = Guards { eps_space: 0.999, eps_conv: 1e-10 };
        let res = run_flow(&st, &cfg).unwrap();
        assert_eq!(res.termination, Termination::GuardViolation);
    }
}
