//! Closed-form a priori bounds and limit predictions for the flow.
//!
//! The radial solutions collapse to an ODE whose solution is the barrier
//!
//! ```text
//! Theta(t, c) = (-alpha t + e^{alpha c})^{1/alpha}   (alpha < 0)
//! Theta(t, c) = e^{c - t}                            (alpha = 0 limit)
//! ```
//!
//! i.e. `ln Theta` solves `dphi/dt = -e^{-alpha phi}` with `phi(0) = c`. By
//! the maximum principle every solution is squeezed between the barriers
//! through its initial extremes, the quantity `dphi/dt * Theta^alpha` stays
//! in an interval pinned by its initial range and `-1`, the gradient maximum
//! is non-increasing, and `k Theta` is pinched between explicit constants.
//! The slow time of the rescaled flow is `s(t) = c - ln Theta(t, c)`.
//!
//! [`build_envelope`] evaluates all of these for given initial data; the
//! pinching constants are derived from the identity
//! `k Theta = v (u/Theta)^{-(1+alpha)} / (-dphi/dt * Theta^alpha)` by taking
//! worst-case products of the individual bounds, so they are conservative
//! but fully explicit.

#[cfg(not(feature = "std"))]
use crate::math::FloatMath;

use crate::error::FlowError;
use crate::kernel::{rhs_physical, spatial_derivatives, CRef, FlowConfig};
use crate::lorentz::curve_length;
use crate::state::GraphState;

/// The radial barrier `Theta(t, c)`.
///
/// Evaluated as `exp(ln_1p(-alpha t + expm1(alpha c)) / alpha)` so the
/// `alpha -> 0^-` regime keeps full double precision; `alpha = 0` uses the
/// limit branch `e^{c - t}`. Errors if `alpha > 0`.
pub fn theta(t: f64, c: f64, alpha: f64) -> Result<f64, FlowError> {
    if alpha > 0.0 || !alpha.is_finite() {
        return Err(FlowError::Domain("theta requires alpha <= 0"));
    }
    if alpha == 0.0 {
        return Ok((c - t).exp());
    }
    let x = -alpha * t + (alpha * c).exp_m1();
    if !(x > -1.0) {
        return Err(FlowError::Domain("theta argument out of range"));
    }
    Ok((x.ln_1p() / alpha).exp())
}

/// `Theta(t, c)^alpha = -alpha t + e^{alpha c}` (identically 1 for alpha = 0).
pub(crate) fn theta_pow_alpha(t: f64, c: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        -alpha * t + (alpha * c).exp()
    }
}

/// The slow time of the rescaled flow, `s(t) = c - ln Theta(t, c)`, the
/// closed-form integral of `ds/dt = Theta^{-alpha}` with `s(0) = 0`.
/// Strictly increasing in `t`; reduces to `s = t` for `alpha = 0`.
///
/// Evaluated as `-ln_1p(-alpha t e^{-alpha c}) / alpha`, which is exact at
/// `t = 0` and keeps precision as `alpha -> 0^-`.
pub fn time_map(t: f64, c: f64, alpha: f64) -> Result<f64, FlowError> {
    if alpha > 0.0 || !alpha.is_finite() {
        return Err(FlowError::Domain("time_map requires alpha <= 0"));
    }
    if alpha == 0.0 {
        return Ok(t);
    }
    let x = -alpha * t * (-alpha * c).exp();
    if !(x > -1.0) {
        return Err(FlowError::Domain("time_map argument out of range"));
    }
    Ok(-x.ln_1p() / alpha)
}

/// Inverse of [`time_map`]: the physical time at slow time `s`, from
/// `t = -e^{alpha c} expm1(-alpha s) / alpha`.
pub(crate) fn inverse_time_map(s: f64, c: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        s
    } else {
        -(alpha * c).exp() * (-alpha * s).exp_m1() / alpha
    }
}

/// `Theta(t(s), phi_i) / Theta(t(s), c_ref)` expressed through the slow time,
/// numerically stable for large `s`:
/// `ratio^alpha = 1 + (e^{alpha phi_i} - e^{alpha c_ref}) e^{alpha (s - c_ref)}`.
pub(crate) fn envelope_ratio_rescaled(s: f64, phi_i: f64, c_ref: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return (phi_i - c_ref).exp();
    }
    let delta = ((alpha * phi_i).exp_m1() - (alpha * c_ref).exp_m1()) * (alpha * (s - c_ref)).exp();
    (delta.ln_1p() / alpha).exp()
}

/// All closed-form bounds evaluated for one set of initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryEnvelope {
    /// `inf phi_0 = ln(inf u_0)`.
    pub phi1: f64,
    /// `sup phi_0 = ln(sup u_0)`.
    pub phi2: f64,
    /// Resolved reference constant, in `[phi1, phi2]`.
    pub c_ref: f64,
    /// `sup |D phi_0|`, strictly below 1 for spacelike data.
    pub grad0: f64,
    /// Lower bound on `dphi/dt * Theta^alpha` (at most -1).
    pub phidot_lo: f64,
    /// Upper bound on `dphi/dt * Theta^alpha` (at least -1, below 0).
    pub phidot_hi: f64,
    /// Derived pinching constant `c3` with `k Theta >= c3 > 0`.
    pub k_theta_lo: f64,
    /// Derived pinching constant `c4` with `k Theta <= c4`.
    pub k_theta_hi: f64,
    /// Lower endpoint of the limit-radius interval.
    pub r_lo: f64,
    /// Upper endpoint of the limit-radius interval.
    pub r_hi: f64,
}

impl TheoryEnvelope {
    /// Lower bound on the rescaled curve length, `L(M_0) e^{-phi2}`.
    pub fn rescaled_length_lo(&self, domain_len: f64) -> f64 {
        self.r_lo * domain_len
    }

    /// Upper bound on the rescaled curve length, `L(M_0) e^{-phi1}`.
    pub fn rescaled_length_hi(&self, domain_len: f64) -> f64 {
        self.r_hi * domain_len
    }
}

/// The limit-radius interval
/// `(L(M_0) / (sup u_0 * L(M)), L(M_0) / (inf u_0 * L(M)))`
/// with `L(M) = d - c` and `L(M_0)` the trapezoid curve length.
/// Invariant under `u_0 -> lambda u_0`.
pub fn radius_interval(u0: &GraphState) -> Result<(f64, f64), FlowError> {
    let l0 = curve_length(u0)?;
    let lm = u0.d() - u0.c();
    Ok((l0 / (u0.u_max() * lm), l0 / (u0.u_min() * lm)))
}

/// Evaluates every closed-form bound for the given initial data.
///
/// The initial time derivative is the right-hand side evaluated on `u0`, so
/// the state must be admissible (spacelike, strictly convex); `cfg.c_ref`
/// must resolve into `[phi1, phi2]`.
pub fn build_envelope(u0: &GraphState, cfg: &FlowConfig) -> Result<TheoryEnvelope, FlowError> {
    cfg.validate()?;
    let q0 = rhs_physical(u0, cfg)?;

    let phi1 = u0.u_min().ln();
    let phi2 = u0.u_max().ln();
    let c_ref = match cfg.c_ref {
        CRef::Auto => 0.5 * (phi1 + phi2),
        CRef::Fixed(v) => {
            if v < phi1 - 1e-12 || v > phi2 + 1e-12 {
                return Err(FlowError::Domain("c_ref must lie in [inf phi0, sup phi0]"));
            }
            v
        }
    };

    let (u_xi, _) = spatial_derivatives(u0);
    let grad0 = u0
        .u()
        .iter()
        .zip(u_xi.iter())
        .map(|(&u, &ux)| (ux / u).abs())
        .fold(0.0, f64::max);

    // dphi/dt(0) * Theta(0)^alpha, capped against the radial value -1.
    let th0_pow = theta_pow_alpha(0.0, c_ref, cfg.alpha);
    let m0_min = q0.iter().map(|&q| q * th0_pow).fold(f64::INFINITY, f64::min);
    let m0_max = q0.iter().map(|&q| q * th0_pow).fold(f64::NEG_INFINITY, f64::max);
    let phidot_lo = m0_min.min(-1.0);
    let phidot_hi = m0_max.max(-1.0);

    // k Theta = v (u/Theta)^{-(1+alpha)} / (-dphi/dt Theta^alpha), bounded by
    // worst-case products: v in [sqrt(1 - grad0^2), 1], u/Theta between the
    // barrier ratios (extremes at t = 0 and t = infinity, where the ratio is
    // monotone), and the time-derivative factor in [-phidot_hi, -phidot_lo].
    let v_lo = (1.0 - grad0 * grad0).sqrt();
    let rho_lo = (phi1 - c_ref).exp();
    let rho_hi = (phi2 - c_ref).exp();
    let ex = -(1.0 + cfg.alpha);
    let a1 = rho_lo.powf(ex);
    let a2 = rho_hi.powf(ex);
    let k_theta_lo = v_lo * a1.min(a2) / (-phidot_lo);
    let k_theta_hi = a1.max(a2) / (-phidot_hi);

    let (r_lo, r_hi) = radius_interval(u0)?;

    Ok(TheoryEnvelope {
        phi1,
        phi2,
        c_ref,
        grad0,
        phidot_lo,
        phidot_hi,
        k_theta_lo,
        k_theta_hi,
        r_lo,
        r_hi,
    })
}
