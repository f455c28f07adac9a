use serde::{Deserialize, Serialize};

use crate::config::DomainConfig;
use crate::error::{Error, Result};

/// One point of a profile curve; `theta` is stored unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
}

impl GeodesicState {
    pub fn new(s: f64, x: f64, r: f64, theta: f64) -> Self {
        Self { s, x, r, theta }
    }
}

/// `(cos θ, sin θ)`, with exact zeros on the coordinate directions so that
/// the axis-parallel exact solutions stay exact.
#[inline]
pub fn tangent(theta: f64) -> (f64, f64) {
    let red = theta.rem_euclid(std::f64::consts::TAU);
    if red == std::f64::consts::FRAC_PI_2 || red == 3.0 * std::f64::consts::FRAC_PI_2 {
        return (0.0, theta.sin());
    }
    if red == 0.0 || red == std::f64::consts::PI {
        return (theta.cos(), 0.0);
    }
    let (s, c) = theta.sin_cos();
    (c, s)
}

/// Planar curvature `θ̇` of the geodesic through `(x, r)` with angle `θ`.
/// Valid on both sides of the axis (the system is odd under `r ↦ -r`).
#[inline]
pub(crate) fn curvature(x: f64, r: f64, theta: f64, alpha: f64) -> f64 {
    let (c, s) = tangent(theta);
    0.5 * x * s + (axis_term(alpha, r) - 0.5 * r) * c
}

/// `α/r`, taken as zero for `α = 0` so that lines through the origin stay
/// regular at `r = 0`.
#[inline]
fn axis_term(alpha: f64, r: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else {
        alpha / r
    }
}

/// Arclength derivative of the curvature along a geodesic.
#[inline]
pub(crate) fn curvature_rate(x: f64, r: f64, theta: f64, alpha: f64) -> f64 {
    let (c, s) = tangent(theta);
    let a_r = axis_term(alpha, r);
    let k = 0.5 * x * s + (a_r - 0.5 * r) * c;
    let fx = 0.5 * s;
    let fr = (-axis_term(alpha, r * r) - 0.5) * c;
    let ft = 0.5 * x * c - (a_r - 0.5 * r) * s;
    fx * c + fr * s + ft * k
}

/// Geodesic system `(ẋ, ṙ, θ̇)` for arclength-parametrized profile curves.
pub fn geodesic_rhs(state: &GeodesicState, cfg: &DomainConfig) -> Result<(f64, f64, f64)> {
    if !(state.r > 0.0) {
        return Err(Error::Domain(state.r));
    }
    let (c, s) = tangent(state.theta);
    Ok((c, s, curvature(state.x, state.r, state.theta, cfg.alpha)))
}

/// `u''` for a profile written as a graph `r = u(x)`.
pub fn ssode_rhs(x: f64, u: f64, du: f64, cfg: &DomainConfig) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(u));
    }
    Ok((0.5 * x * du + cfg.alpha / u - 0.5 * u) * (1.0 + du * du))
}

/// `u'''` obtained by differentiating the graph equation once.
pub fn ssode_third(x: f64, u: f64, du: f64, alpha: f64) -> f64 {
    let phi = 0.5 * x * du + alpha / u - 0.5 * u;
    let ddu = phi * (1.0 + du * du);
    let dphi = 0.5 * x * ddu - alpha * du / (u * u);
    dphi * (1.0 + du * du) + phi * 2.0 * du * ddu
}

/// `f''` for a profile written as a graph `x = f(r)`.
pub fn rgraph_rhs(r: f64, f: f64, df: f64, cfg: &DomainConfig) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(r));
    }
    Ok(((0.5 * r - cfg.alpha / r) * df - 0.5 * f) * (1.0 + df * df))
}

/// Geometric quantities attached to a curve point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScalars {
    /// Mean curvature of the revolved hypersurface, `α cos θ / r - θ̇`.
    pub h: f64,
    /// `x u' - u`; NaN where the curve is vertical.
    pub psi: f64,
    /// `(x/2) u' + α/u - u/2`; NaN where the curve is vertical.
    pub phi: f64,
    /// `x sin θ - r cos θ`.
    pub lambda: f64,
    /// Planar curvature `θ̇`.
    pub kappa: f64,
}

const GRAPH_EPS: f64 = 1e-12;

impl DerivedScalars {
    pub fn at(x: f64, r: f64, theta: f64, kappa: f64, alpha: f64) -> Self {
        let (c, s) = tangent(theta);
        let lambda = x * s - r * c;
        let h = if r != 0.0 { alpha * c / r - kappa } else { -kappa * (1.0 + alpha) };
        let (psi, phi) = if c.abs() > GRAPH_EPS && r != 0.0 {
            let du = s / c;
            (x * du - r, 0.5 * x * du + alpha / r - 0.5 * r)
        } else {
            (f64::NAN, f64::NAN)
        };
        Self { h, psi, phi, lambda, kappa }
    }
}
