//! Exact geometry of spacelike radial graphs over the hyperbola arc.
//!
//! Ambient space is the Lorentz-Minkowski plane with `<a, b>_L = a1 b1 - a2 b2`.
//! The arc is parametrized by the hyperbolic angle, `x(xi) = (sinh xi, cosh xi)`,
//! the unique unit-speed parametrization up to shift and reflection, and a
//! radial graph is `X(xi) = u(xi) x(xi)` with `u > 0`. For such graphs
//!
//! ```text
//! v       = sqrt(1 - u^{-2} u_xi^2)            (tilt factor, in (0, 1])
//! g_xixi  = u^2 - u_xi^2                       (induced metric)
//! k       = (u_xixi u + u^2 - 2 u_xi^2) / (v^3 u^3)
//! w       = <X, nu>_L = u / v                  (support function)
//! Phi     = 1 / (|X|^alpha k) = u^{-alpha} / k (flow speed; |X| = u)
//! ```
//!
//! with `nu` the past-directed timelike unit normal. Only the strictly convex
//! branch `u u_xixi + u^2 - 2 u_xi^2 > 0` is admissible; the other branch is
//! rejected as [`FlowError::DegenerateConvexity`] rather than switching
//! normals.
//!
//! [`curvature_frenet_oracle`] recomputes `k` by a route that shares nothing
//! with the closed formula: embed the nodes, build the unit tangent from
//! finite differences of the polyline, differentiate it in Minkowski arc
//! length, and take `k = sqrt(|<T_s, T_s>_L|)`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatMath;

use crate::error::FlowError;
use crate::kernel::{spatial_derivatives, AnisoPow, Guards};
use crate::state::GraphState;

/// A point of the Lorentz-Minkowski plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2L {
    /// Spacelike coordinate.
    pub x1: f64,
    /// Timelike coordinate.
    pub x2: f64,
}

/// The indefinite inner product `a1 b1 - a2 b2`.
pub fn minkowski_inner(a: Point2L, b: Point2L) -> f64 {
    a.x1 * b.x1 - a.x2 * b.x2
}

/// The point of the unit hyperbola at hyperbolic angle `xi`:
/// `(sinh xi, cosh xi)`, which satisfies `<p, p>_L = -1`, `x2 > 0`, and is a
/// unit-speed curve (`sigma_xixi = 1`).
pub fn hyperbola_point(xi: f64) -> Point2L {
    Point2L { x1: xi.sinh(), x2: xi.cosh() }
}

/// Embeds every node: node `i` maps to `u_i * hyperbola_point(xi_i)`, so
/// `<P_i, P_i>_L = -u_i^2`.
pub fn embed_graph(state: &GraphState) -> Vec<Point2L> {
    state
        .u()
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let p = hyperbola_point(state.xi(i));
            Point2L { x1: u * p.x1, x2: u * p.x2 }
        })
        .collect()
}

/// Per-node derived geometry of an admissible state.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFields {
    /// First `xi`-derivative of `u` (central stencil, ghost reflection).
    pub u_xi: Vec<f64>,
    /// Second `xi`-derivative of `u`.
    pub u_xixi: Vec<f64>,
    /// `phi = ln u`.
    pub phi: Vec<f64>,
    /// Tilt factor `v` in `(0, 1]`.
    pub v: Vec<f64>,
    /// Induced metric component `g_xixi = u^2 - u_xi^2 = u^2 v^2`.
    pub g_metric: Vec<f64>,
    /// Curvature of the strictly convex branch.
    pub k: Vec<f64>,
    /// Support function `w = u / v`.
    pub w_support: Vec<f64>,
    /// Flow speed `Phi = u^{-alpha} / k`.
    pub speed: Vec<f64>,
}

/// Evaluates all derived geometry, erroring on the first node at which the
/// state fails the spacelike or strict-convexity guard.
pub fn geometry_fields(
    state: &GraphState,
    alpha: f64,
    guards: Guards,
) -> Result<GeometryFields, FlowError> {
    let (u_xi, u_xixi) = spatial_derivatives(state);
    let n = state.n();
    let pow = AnisoPow::from_alpha(alpha);
    let mut out = GeometryFields {
        u_xi,
        u_xixi,
        phi: vec![0.0; n + 1],
        v: vec![0.0; n + 1],
        g_metric: vec![0.0; n + 1],
        k: vec![0.0; n + 1],
        w_support: vec![0.0; n + 1],
        speed: vec![0.0; n + 1],
    };
    for (i, &u) in state.u().iter().enumerate() {
        let ux = out.u_xi[i];
        let uxx = out.u_xixi[i];
        if ux.abs() >= (1.0 - guards.eps_space) * u {
            return Err(FlowError::NotSpacelike { node: i });
        }
        let numer = uxx * u + u * u - 2.0 * ux * ux;
        if numer <= guards.eps_conv * u * u {
            return Err(FlowError::DegenerateConvexity { node: i });
        }
        let v = (1.0 - (ux / u) * (ux / u)).sqrt();
        let k = numer / (v * v * v * u * u * u);
        out.phi[i] = u.ln();
        out.v[i] = v;
        out.g_metric[i] = u * u - ux * ux;
        out.k[i] = k;
        out.w_support[i] = u / v;
        out.speed[i] = pow.eval(u) / k;
    }
    Ok(out)
}

/// Curvature recomputed independently of the closed formula, from the Frenet
/// construction on the embedded polyline.
///
/// Returns one value per node; the two nodes nearest each boundary are `NaN`
/// (the construction needs two neighbor layers). Interior values agree with
/// [`GeometryFields::k`] to `O(h^2)`; accuracy claims assume `n >= 32`.
pub fn curvature_frenet_oracle(state: &GraphState) -> Result<Vec<f64>, FlowError> {
    let n = state.n();
    debug_assert!(n >= 32, "the Frenet oracle is intended for n >= 32");
    let h = state.h();
    let inv_2h = 1.0 / (2.0 * h);
    let p = embed_graph(state);

    // Unit tangent T = X_xi / sqrt(<X_xi, X_xi>_L) from polyline differences,
    // valid at nodes 1..=n-1.
    let mut sqrt_g = vec![f64::NAN; n + 1];
    let mut tangent = vec![Point2L { x1: f64::NAN, x2: f64::NAN }; n + 1];
    for i in 1..n {
        let xv = Point2L {
            x1: (p[i + 1].x1 - p[i - 1].x1) * inv_2h,
            x2: (p[i + 1].x2 - p[i - 1].x2) * inv_2h,
        };
        let g = minkowski_inner(xv, xv);
        if g <= 0.0 {
            return Err(FlowError::NotSpacelike { node: i });
        }
        let root = g.sqrt();
        sqrt_g[i] = root;
        tangent[i] = Point2L { x1: xv.x1 / root, x2: xv.x2 / root };
    }

    // T_s = T_xi dxi/ds with ds = sqrt(g) dxi; k = sqrt(|<T_s, T_s>_L|).
    let mut k = vec![f64::NAN; n + 1];
    for i in 2..n.saturating_sub(1) {
        let ts = Point2L {
            x1: (tangent[i + 1].x1 - tangent[i - 1].x1) * inv_2h / sqrt_g[i],
            x2: (tangent[i + 1].x2 - tangent[i - 1].x2) * inv_2h / sqrt_g[i],
        };
        k[i] = minkowski_inner(ts, ts).abs().sqrt();
    }
    Ok(k)
}

/// Length of the embedded curve: composite trapezoid of
/// `integral sqrt(u^2 - u_xi^2) dxi` over `[c, d]`.
///
/// For constant `u = r` this returns `r (d - c)` to round-off.
pub fn curve_length(state: &GraphState) -> Result<f64, FlowError> {
    let (u_xi, _) = spatial_derivatives(state);
    let guards = Guards::default();
    let mut acc = 0.0;
    let n = state.n();
    for (i, (&u, &ux)) in state.u().iter().zip(u_xi.iter()).enumerate() {
        if ux.abs() >= (1.0 - guards.eps_space) * u {
            return Err(FlowError::NotSpacelike { node: i });
        }
        let f = (u * u - ux * ux).sqrt();
        acc += if i == 0 || i == n { 0.5 * f } else { f };
    }
    Ok(acc * state.h())
}
