//! The discrete flow state: a grid sample of the radial graph function.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::FlowError;

/// Minimum number of grid intervals accepted by the solver.
pub const MIN_INTERVALS: usize = 8;

/// Grid sample of the radial graph function `u` over `xi in [c, d]`, together
/// with the physical clock `t` and the rescaled clock `s`.
///
/// Nodes are `xi_i = c + i h` with `h = (d - c)/n`, `i = 0..=n`, so the state
/// holds `n + 1` samples. Structural invariants (`d > c`, `n >= 8`, `u > 0`
/// and finite) are enforced at construction; spacelikeness and convexity are
/// enforced by the operations that need them.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    c: f64,
    d: f64,
    n: usize,
    u: Vec<f64>,
    t: f64,
    s: f64,
}

impl GraphState {
    /// Builds a state from node values at `t = s = 0`.
    ///
    /// `u.len()` must be `n + 1` for some `n >= 8`, with every sample
    /// positive and finite, and `d > c`.
    pub fn new(c: f64, d: f64, u: Vec<f64>) -> Result<Self, FlowError> {
        if !(d > c) || !c.is_finite() || !d.is_finite() {
            return Err(FlowError::Domain("domain requires finite c < d"));
        }
        if u.len() < MIN_INTERVALS + 1 {
            return Err(FlowError::Domain("grid requires at least 8 intervals"));
        }
        if u.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(FlowError::Domain("graph values must be positive and finite"));
        }
        let n = u.len() - 1;
        Ok(GraphState { c, d, n, u, t: 0.0, s: 0.0 })
    }

    /// Spatially constant state `u = r` (a piece of the hyperbola of radius `r`).
    pub fn constant(c: f64, d: f64, n: usize, r: f64) -> Result<Self, FlowError> {
        GraphState::new(c, d, vec![r; n + 1])
    }

    /// Left endpoint of the parameter interval.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Right endpoint of the parameter interval.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Number of grid intervals (`n`); there are `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `h = (d - c)/n`.
    pub fn h(&self) -> f64 {
        (self.d - self.c) / self.n as f64
    }

    /// Parameter value of node `i`.
    pub fn xi(&self, i: usize) -> f64 {
        self.c + i as f64 * self.h()
    }

    /// Node samples of the graph function.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Physical time.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Rescaled time.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Smallest node value.
    pub fn u_min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest node value.
    pub fn u_max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Replaces the samples, keeping domain and clocks (crate-internal: the
    /// integrator has already validated the new samples).
    pub(crate) fn set_u(&mut self, u: Vec<f64>) {
        debug_assert_eq!(u.len(), self.n + 1);
        self.u = u;
    }

    /// Scales every sample by `lambda > 0` (used by the covariance checks).
    pub fn scaled(&self, lambda: f64) -> Result<Self, FlowError> {
        if !(lambda > 0.0) {
            return Err(FlowError::Domain("scale factor must be positive"));
        }
        let mut out = self.clone();
        for v in &mut out.u {
            *v *= lambda;
        }
        Ok(out)
    }

    /// The same samples stamped with the given clocks (for evaluating
    /// diagnostics against externally constructed mid-flow states).
    pub fn with_clocks(mut self, t: f64, s: f64) -> Result<Self, FlowError> {
        if !(t >= 0.0) || !(s >= 0.0) || !t.is_finite() || !s.is_finite() {
            return Err(FlowError::Domain("clocks must be finite and non-negative"));
        }
        self.t = t;
        self.s = s;
        Ok(self)
    }

    pub(crate) fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub(crate) fn set_s(&mut self, s: f64) {
        self.s = s;
    }
}
