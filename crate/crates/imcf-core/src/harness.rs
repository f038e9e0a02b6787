//! Reproducible studies: convergence orders, alpha sweeps of the limit
//! radius, and scaling-covariance checks.
//!
//! Every study is a pure function of its [`StudySpec`] (random families are
//! seeded), runs its rows in a deterministic order, and reports errors as
//! tables suitable for Richardson analysis: measured orders are
//! `log2(error_k / error_{k+1})` under grid doubling or step halving, and
//! rows whose error sits at round-off are flagged exact instead of carrying
//! a meaningless order.


use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

#[cfg(not(feature = "std"))]
use crate::math::FloatMath;

use crate::error::FlowError;
use crate::integrate::{run_flow, RunResult, Termination};
use crate::kernel::{guards_ok, FlowConfig, Guards, Mode};
use crate::lorentz::{curvature_frenet_oracle, geometry_fields};
use crate::state::GraphState;
use crate::theory::{radius_interval, theta};

/// Absolute tolerance used for the limit-radius containment verdict of
/// [`alpha_sweep`].
pub const RADIUS_CONTAINMENT_TOL: f64 = 1e-3;

/// Error level below which a study row is reported as exact (round-off)
/// rather than carrying a measured order.
const EXACTNESS_FLOOR: f64 = 1e-11;

/// Which study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Closed-form vs Frenet curvature gap, and envelope violations of a
    /// physical run, across grid doublings.
    OrderSpatial,
    /// Radial runs against the barrier across step halvings.
    OrderTemporal,
    /// One converged rescaled run per `alpha`, against the radius interval.
    AlphaSweep,
    /// Two physical runs compared under `u -> lambda u`, `t -> lambda^{-alpha} t`.
    Covariance,
}

/// Families of Neumann-compatible initial data.
///
/// The cosine family is `u0(xi) = r (1 + A cos(m pi (xi - c)/(d - c)))`,
/// which has `u0_xi = 0` at both endpoints by construction; admissibility
/// (spacelike and strictly convex) is checked, not assumed. The random mix
/// draws coefficients for modes 1..=4 uniformly from `[-A, A]` with a seeded
/// generator, then halves them until the guards pass.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialFamily {
    /// Constant data `u0 = r`.
    Constant {
        /// Radius of the initial hyperbola piece.
        r: f64,
    },
    /// Single cosine mode.
    Cosine {
        /// Base radius.
        r: f64,
        /// Relative amplitude `A`.
        amplitude: f64,
        /// Mode number `m >= 1`.
        mode_m: u32,
    },
    /// Seeded random mix of modes 1..=4 (exercises non-symmetric data).
    RandomCosineMix {
        /// Base radius.
        r: f64,
        /// Relative amplitude bound `A`.
        amplitude: f64,
        /// Seed for the coefficient draw.
        seed: u64,
    },
}

impl InitialFamily {
    /// The same family scaled by `lambda` (all members are linear in `r`).
    pub fn scaled(&self, lambda: f64) -> InitialFamily {
        let mut out = self.clone();
        match &mut out {
            InitialFamily::Constant { r }
            | InitialFamily::Cosine { r, .. }
            | InitialFamily::RandomCosineMix { r, .. } => *r *= lambda,
        }
        out
    }

    /// Builds the family member on the given grid and verifies the guards.
    pub fn build(&self, c: f64, d: f64, n: usize, guards: Guards) -> Result<GraphState, FlowError> {
        let len = d - c;
        let state = match *self {
            InitialFamily::Constant { r } => GraphState::constant(c, d, n, r)?,
            InitialFamily::Cosine { r, amplitude, mode_m } => {
                if mode_m == 0 {
                    return Err(FlowError::Domain("cosine mode must be at least 1"));
                }
                let w = mode_m as f64 * core::f64::consts::PI / len;
                let u: Vec<f64> = (0..=n)
                    .map(|i| {
                        let xi = c + i as f64 * len / n as f64;
                        r * (1.0 + amplitude * (w * (xi - c)).cos())
                    })
                    .collect();
                GraphState::new(c, d, u)?
            }
            InitialFamily::RandomCosineMix { r, amplitude, seed } => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                let mut coeffs = [0.0; 4];
                for a in &mut coeffs {
                    *a = -amplitude + 2.0 * amplitude * unit();
                }
                let h = len / n as f64;
                let mut factor = 1.0;
                for _ in 0..60 {
                    let u: Vec<f64> = (0..=n)
                        .map(|i| {
                            let xi = c + i as f64 * h;
                            let mut bump = 0.0;
                            for (m, &a) in coeffs.iter().enumerate() {
                                let w = (m + 1) as f64 * core::f64::consts::PI / len;
                                bump += factor * a * (w * (xi - c)).cos();
                            }
                            r * (1.0 + bump)
                        })
                        .collect();
                    if u.iter().all(|&v| v > 0.0) && guards_ok(&u, h, guards).is_ok() {
                        return GraphState::new(c, d, u);
                    }
                    factor *= 0.5;
                }
                return Err(FlowError::Domain("random data could not be rescaled to admissibility"));
            }
        };
        guards_ok(state.u(), state.h(), guards)?;
        Ok(state)
    }
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    /// Grid spacing `h` (spatial) or step `dt` (temporal).
    pub resolution: f64,
    /// Error at this level.
    pub error: f64,
    /// `log2` error ratio against the previous level; `None` for the first
    /// row and for exact rows.
    pub order: Option<f64>,
    /// The error sits at round-off, so no order can be measured.
    pub exact: bool,
}

/// Result of a convergence-order study.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy {
    /// Spatial: max interior gap between the closed-form curvature and the
    /// Frenet oracle. Temporal: max node error against the barrier at
    /// `end_time`.
    pub rows: Vec<OrderRow>,
    /// Spatial study only: max recorded envelope violation of a physical run
    /// per level (empty for temporal studies).
    pub envelope_rows: Vec<OrderRow>,
}

/// One row of an [`alpha_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Anisotropy exponent of this row.
    pub alpha: f64,
    /// The full rescaled run (termination verdicts included; a guard
    /// violation is recorded here instead of aborting the sweep).
    pub result: RunResult,
    /// Lower endpoint of the radius interval (alpha-independent).
    pub r_lo: f64,
    /// Upper endpoint of the radius interval.
    pub r_hi: f64,
    /// Whether the reported limit radius lies in
    /// `[r_lo - tol, r_hi + tol]` with [`RADIUS_CONTAINMENT_TOL`];
    /// `false` when the run did not converge.
    pub contained: bool,
}

/// A reproducible study: the kind, the base configuration, the number of
/// refinement levels, the alphas to sweep, and the initial-data family.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    /// Which study to run.
    pub kind: StudyKind,
    /// Base configuration; `n` is the coarsest grid, `dt_max` the coarsest
    /// step of temporal studies, `end_time` the run horizon.
    pub base_cfg: FlowConfig,
    /// Number of refinement levels (grid doublings or step halvings).
    pub refinements: usize,
    /// Exponents for [`alpha_sweep`].
    pub alphas: Vec<f64>,
    /// Initial data shared by all rows.
    pub initial_family: InitialFamily,
}

fn attach_order(rows: &mut [OrderRow]) {
    for k in 1..rows.len() {
        if rows[k].exact || rows[k - 1].exact {
            continue;
        }
        if rows[k].error > 0.0 {
            let ord = (rows[k - 1].error / rows[k].error).ln() / core::f64::consts::LN_2;
            rows[k].order = Some(ord);
        }
    }
}

/// Measured convergence orders under grid doubling (`OrderSpatial`) or step
/// halving (`OrderTemporal`).
///
/// The spatial study reports, per level, the max interior gap between the
/// closed-form curvature and the Frenet oracle on the initial data, plus the
/// max envelope violation recorded by a physical run to `end_time`. The
/// temporal study requires constant initial data and reports the max node
/// error against `Theta(end_time, ln r)`.
pub fn convergence_order_study(spec: &StudySpec) -> Result<OrderStudy, FlowError> {
    spec.base_cfg.validate()?;
    if spec.refinements == 0 {
        return Err(FlowError::Domain("study requires at least one refinement level"));
    }
    match spec.kind {
        StudyKind::OrderSpatial => spatial_study(spec),
        StudyKind::OrderTemporal => temporal_study(spec),
        _ => Err(FlowError::Domain(
            "convergence_order_study handles only the order_spatial/order_temporal kinds",
        )),
    }
}

fn spatial_study(spec: &StudySpec) -> Result<OrderStudy, FlowError> {
    let base = &spec.base_cfg;
    let mut rows = Vec::new();
    let mut env_rows = Vec::new();
    for level in 0..spec.refinements {
        let n = base.n << level;
        let state = spec.initial_family.build(base.c, base.d, n, base.guards)?;
        let h = state.h();

        let gf = geometry_fields(&state, base.alpha, base.guards)?;
        let kf = curvature_frenet_oracle(&state)?;
        let gap = (2..n - 1)
            .map(|i| (gf.k[i] - kf[i]).abs())
            .fold(0.0, f64::max);
        rows.push(OrderRow { resolution: h, error: gap, order: None, exact: gap < EXACTNESS_FLOOR });

        let mut cfg = base.clone();
        cfg.n = n;
        cfg.mode = Mode::Physical;
        let run = run_flow(&state, &cfg)?;
        if run.termination != Termination::ReachedEnd {
            return Err(FlowError::StudyFailed { level });
        }
        let env_max = run.series.iter().map(|r| r.env_violation).fold(0.0, f64::max);
        env_rows.push(OrderRow {
            resolution: h,
            error: env_max,
            order: None,
            exact: env_max < 1e-12,
        });
    }
    attach_order(&mut rows);
    attach_order(&mut env_rows);
    Ok(OrderStudy { rows, envelope_rows: env_rows })
}

fn temporal_study(spec: &StudySpec) -> Result<OrderStudy, FlowError> {
    let base = &spec.base_cfg;
    let r = match spec.initial_family {
        InitialFamily::Constant { r } => r,
        _ => return Err(FlowError::Domain("temporal study requires constant initial data")),
    };
    let exact = theta(base.end_time, r.ln(), base.alpha)?;
    let state = GraphState::constant(base.c, base.d, base.n, r)?;
    let mut rows = Vec::new();
    for level in 0..spec.refinements {
        let mut cfg = base.clone();
        cfg.mode = Mode::Physical;
        cfg.dt_max = base.dt_max / (1u64 << level) as f64;
        let run = run_flow(&state, &cfg)?;
        if run.termination != Termination::ReachedEnd {
            return Err(FlowError::StudyFailed { level });
        }
        let err = run
            .final_state
            .u()
            .iter()
            .map(|&u| (u - exact).abs())
            .fold(0.0, f64::max);
        rows.push(OrderRow {
            resolution: cfg.dt_max,
            error: err,
            order: None,
            exact: err < 1e-13,
        });
    }
    attach_order(&mut rows);
    Ok(OrderStudy { rows, envelope_rows: Vec::new() })
}

/// One converged rescaled run per `alpha`, each checked against the
/// (alpha-independent) radius interval of the initial data. Rows whose run
/// hits a guard record the termination instead of aborting the sweep.
pub fn alpha_sweep(spec: &StudySpec) -> Result<Vec<SweepRow>, FlowError> {
    spec.base_cfg.validate()?;
    if spec.kind != StudyKind::AlphaSweep {
        return Err(FlowError::Domain("alpha_sweep requires the alpha_sweep kind"));
    }
    if spec.base_cfg.mode != Mode::Rescaled {
        return Err(FlowError::Domain("alpha_sweep requires rescaled mode"));
    }
    let mut out = Vec::new();
    for &alpha in &spec.alphas {
        let mut cfg = spec.base_cfg.clone();
        cfg.alpha = alpha;
        let row = match spec.initial_family.build(cfg.c, cfg.d, cfg.n, cfg.guards) {
            Ok(state) => {
                let (r_lo, r_hi) = radius_interval(&state)?;
                let result = run_flow(&state, &cfg)?;
                let contained = result.r_infinity.map_or(false, |r_inf| {
                    r_lo - RADIUS_CONTAINMENT_TOL <= r_inf && r_inf <= r_hi + RADIUS_CONTAINMENT_TOL
                });
                SweepRow { alpha, result, r_lo, r_hi, contained }
            }
            Err(FlowError::NotSpacelike { .. } | FlowError::DegenerateConvexity { .. }) => {
                // Inadmissible data for this row: record the rejection.
                let state = GraphState::constant(cfg.c, cfg.d, cfg.n, 1.0)?;
                SweepRow {
                    alpha,
                    result: RunResult {
                        final_state: state,
                        series: Vec::new(),
                        r_infinity: None,
                        termination: Termination::GuardViolation,
                    },
                    r_lo: f64::NAN,
                    r_hi: f64::NAN,
                    contained: false,
                }
            }
            Err(e) => return Err(e),
        };
        out.push(row);
    }
    Ok(out)
}

/// Max node discrepancy between `lambda * u(., lambda^{-alpha} t_probe)` and
/// the run from `lambda`-scaled data sampled at `t_probe`; the scalar flow
/// is invariant under this substitution, so the discrepancy is pure
/// integration error.
pub fn scaling_covariance_check(
    family: &InitialFamily,
    lambda: f64,
    t_probe: f64,
    base_cfg: &FlowConfig,
) -> Result<f64, FlowError> {
    base_cfg.validate()?;
    if !(lambda > 0.0) || !(t_probe > 0.0) {
        return Err(FlowError::Domain("covariance check requires lambda, t_probe > 0"));
    }
    let alpha = base_cfg.alpha;

    let mut cfg1 = base_cfg.clone();
    cfg1.mode = Mode::Physical;
    cfg1.end_time = lambda.powf(-alpha) * t_probe;
    let u0 = family.build(cfg1.c, cfg1.d, cfg1.n, cfg1.guards)?;
    let run1 = run_flow(&u0, &cfg1)?;
    if run1.termination != Termination::ReachedEnd {
        return Err(FlowError::StudyFailed { level: 0 });
    }

    let mut cfg2 = base_cfg.clone();
    cfg2.mode = Mode::Physical;
    cfg2.end_time = t_probe;
    let u0l = family.scaled(lambda).build(cfg2.c, cfg2.d, cfg2.n, cfg2.guards)?;
    let run2 = run_flow(&u0l, &cfg2)?;
    if run2.termination != Termination::ReachedEnd {
        return Err(FlowError::StudyFailed { level: 1 });
    }

    let worst = run1
        .final_state
        .u()
        .iter()
        .zip(run2.final_state.u().iter())
        .map(|(&a, &b)| (lambda * a - b).abs())
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Composite Simpson quadrature (used as the independent length oracle in
/// verification suites). `n` is rounded up to even.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cosine_family() -> InitialFamily {
        InitialFamily::Cosine { r: 2.0, amplitude: 0.05, mode_m: 1 }
    }

    #[test]
    fn simpson_matches_closed_forms() {
        assert_abs_diff_eq!(simpson(|x| x * x, 0.0, 1.0, 64), 1.0 / 3.0, epsilon = 1e-12);
        let pi = core::f64::consts::PI;
        assert_abs_diff_eq!(simpson(f64::sin, 0.0, pi, 1024), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn cosine_family_is_neumann_compatible_and_admissible() {
        let st = cosine_family().build(0.0, 1.0, 64, Guards::default()).unwrap();
        assert_abs_diff_eq!(st.u()[0], 2.1, epsilon = 1e-15);
        assert_abs_diff_eq!(st.u()[64], 1.9, epsilon = 1e-15);
        let (ux, _) = crate::kernel::spatial_derivatives(&st);
        assert_eq!(ux[0], 0.0);
        assert_eq!(ux[64], 0.0);
    }

    #[test]
    fn oversized_amplitude_is_rejected() {
        let fam = InitialFamily::Cosine { r: 2.0, amplitude: 0.6, mode_m: 1 };
        assert!(matches!(
            fam.build(0.0, 1.0, 64, Guards::default()),
            Err(FlowError::DegenerateConvexity { .. })
        ));
    }

    #[test]
    fn random_mix_is_deterministic_and_admissible() {
        let fam = InitialFamily::RandomCosineMix { r: 2.0, amplitude: 0.05, seed: 7 };
        let a = fam.build(0.0, 1.0, 64, Guards::default()).unwrap();
        let b = fam.build(0.0, 1.0, 64, Guards::default()).unwrap();
        assert_eq!(a.u(), b.u());
        // A different seed gives different data.
        let c = InitialFamily::RandomCosineMix { r: 2.0, amplitude: 0.05, seed: 8 }
            .build(0.0, 1.0, 64, Guards::default())
            .unwrap();
        assert_ne!(a.u(), c.u());
    }

    #[test]
    fn temporal_study_measures_fourth_order() {
        // Wide, coarse grid so dt_max is the actual step (the CFL bound does
        // not bind for dt <= 0.02 here).
        let mut cfg = FlowConfig::new(-1.0, 0.0, 4.0, 8, Mode::Physical);
        cfg.dt_max = 0.02;
        cfg.end_time = 1.0;
        let spec = StudySpec {
            kind: StudyKind::OrderTemporal,
            base_cfg: cfg,
            refinements: 3,
            alphas: vec![],
            initial_family: InitialFamily::Constant { r: 2.0 },
        };
        let study = convergence_order_study(&spec).unwrap();
        assert_eq!(study.rows.len(), 3);
        for w in study.rows.windows(2) {
            assert!(w[1].error < w[0].error);
        }
        for row in &study.rows[1..] {
            let ord = row.order.unwrap();
            assert!((ord - 4.0).abs() <= 0.4, "order = {ord}");
        }
    }

    #[test]
    fn spatial_study_measures_second_order_curvature() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 64, Mode::Physical);
        cfg.end_time = 0.02;
        let spec = StudySpec {
            kind: StudyKind::OrderSpatial,
            base_cfg: cfg,
            refinements: 2,
            alphas: vec![],
            initial_family: cosine_family(),
        };
        let study = convergence_order_study(&spec).unwrap();
        let ord = study.rows[1].order.unwrap();
        assert!((ord - 2.0).abs() <= 0.3, "order = {ord}");
        assert_eq!(study.envelope_rows.len(), 2);
    }

    #[test]
    fn constant_data_rows_are_flagged_exact() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 64, Mode::Physical);
        cfg.end_time = 0.02;
        let spec = StudySpec {
            kind: StudyKind::OrderSpatial,
            base_cfg: cfg,
            refinements: 2,
            alphas: vec![],
            initial_family: InitialFamily::Constant { r: 2.0 },
        };
        let study = convergence_order_study(&spec).unwrap();
        for row in &study.rows {
            assert!(row.exact, "error = {:e}", row.error);
            assert!(row.order.is_none());
        }
    }

    #[test]
    fn constant_sweep_collapses_to_unit_radius() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 32, Mode::Rescaled);
        cfg.end_time = 40.0;
        let spec = StudySpec {
            kind: StudyKind::AlphaSweep,
            base_cfg: cfg,
            refinements: 1,
            alphas: vec![-2.0, -1.0, -0.5, 0.0],
            initial_family: InitialFamily::Constant { r: 3.0 },
        };
        let rows = alpha_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert_eq!(row.result.termination, Termination::Converged);
            let r_inf = row.result.r_infinity.unwrap();
            assert_abs_diff_eq!(r_inf, 1.0, epsilon = 1e-6);
            assert!(row.contained, "alpha = {}", row.alpha);
            assert_abs_diff_eq!(row.r_lo, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(row.r_hi, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sweep_records_guard_rows_instead_of_aborting() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 32, Mode::Rescaled);
        cfg.end_time = 1.0;
        let spec = StudySpec {
            kind: StudyKind::AlphaSweep,
            base_cfg: cfg,
            refinements: 1,
            alphas: vec![-1.0],
            initial_family: InitialFamily::Cosine { r: 2.0, amplitude: 0.6, mode_m: 1 },
        };
        let rows = alpha_sweep(&spec).unwrap();
        assert_eq!(rows[0].result.termination, Termination::GuardViolation);
        assert!(!rows[0].contained);
    }

    #[test]
    fn covariance_check_on_constant_data_matches_closed_form() {
        // lambda u(2 t) with u from r = 1 equals Theta(t, ln 2) = 4/3 at
        // t = 0.25; the numeric discrepancy is pure integration error.
        let cfg = FlowConfig::new(-1.0, 0.0, 1.0, 64, Mode::Physical);
        let worst =
            scaling_covariance_check(&InitialFamily::Constant { r: 1.0 }, 2.0, 0.25, &cfg).unwrap();
        assert!(worst <= 1e-6, "worst = {worst:e}");
    }

    #[test]
    fn covariance_check_is_identity_at_lambda_one() {
        let cfg = FlowConfig::new(-1.0, 0.0, 1.0, 32, Mode::Physical);
        let worst =
            scaling_covariance_check(&InitialFamily::Constant { r: 2.0 }, 1.0, 0.1, &cfg).unwrap();
        assert_eq!(worst, 0.0);
    }
}
