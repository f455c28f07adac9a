use serde::{Deserialize, Serialize};

use super::{convexity_identity_residual, ConicalEnd, EndSolverConfig};
use crate::error::{Error, Result};
use crate::numerics::fit_slope;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub ok: bool,
    /// Worst-case slack; negative when the check fails.
    pub margin: f64,
}

impl PropertyCheck {
    fn from_margin(margin: f64) -> Self {
        Self { ok: margin > 0.0, margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub sigma: f64,
    /// `u > σx` at every node.
    pub cone_domination: PropertyCheck,
    /// `u(0) < sqrt(2α)`.
    pub u0_bound: PropertyCheck,
    /// Fitted exponent of `|u - σx|` against `x` on the decay window.
    pub value_decay_exponent: f64,
    pub value_decay: PropertyCheck,
    /// Fitted exponent of `|u' - σ|`.
    pub slope_decay_exponent: f64,
    pub slope_decay: PropertyCheck,
    /// `H > 0` and `Ψ < 0` at every node.
    pub mean_convexity: PropertyCheck,
    /// `u'' > 0` at interior nodes and `0 < u' < σ`.
    pub convexity: PropertyCheck,
    /// Residual of `-Ψ/2 = αK` and of the twice-differentiated identity.
    pub convexity_identity_residual: f64,
    pub convexity_identity: PropertyCheck,
    /// `u(x)/x` strictly decreasing on `x > 0`.
    pub ratio_decreasing: PropertyCheck,
    /// Equation defect on the grid below `1e-8`.
    pub residual: PropertyCheck,
    pub notes: Vec<String>,
}

impl PropertyReport {
    /// True when items (i)-(iv) all pass.
    pub fn all_ok(&self) -> bool {
        [self.cone_domination, self.u0_bound, self.value_decay, self.slope_decay, self.mean_convexity, self.convexity]
            .iter()
            .all(|c| c.ok)
    }
}

/// Window used for the decay-rate fits.
const DECAY_WINDOW: (f64, f64) = (12.5, 50.0);
const IDENTITY_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-8;

/// Hard invariants asserted on every end produced by the solver.
pub(crate) fn check_invariants(end: &ConicalEnd) -> Result<()> {
    let g = &end.grid;
    let (alpha, sigma) = (end.alpha, end.sigma);
    let fail = |msg: String| Err(Error::InvariantViolated(format!("sigma = {sigma}: {msg}")));
    for i in 0..g.len() {
        let (x, u, du) = (g.x[i], g.y[i], g.dy[i]);
        if !(u > sigma * x) {
            return fail(format!("u = {u} not above the cone at x = {x}"));
        }
        if !(du > 0.0 && du < sigma) {
            return fail(format!("u' = {du} outside (0, sigma) at x = {x}"));
        }
        if i > 0 && i + 1 < g.len() && !(g.ddy[i] > 0.0) {
            return fail(format!("u'' = {:e} not positive at x = {x}", g.ddy[i]));
        }
        if x >= 1.0 {
            let vb = 2.0 * alpha / (sigma * x);
            let db = 2.0 * alpha / (sigma * x * x);
            if (u - sigma * x).abs() > vb || (du - sigma).abs() > db {
                return fail(format!("decay envelope violated at x = {x}"));
            }
        }
    }
    if !(end.u0() < (2.0 * alpha).sqrt()) {
        return fail(format!("u(0) = {} not below sqrt(2 alpha)", end.u0()));
    }
    Ok(())
}

pub fn verify_end_properties(end: &ConicalEnd, ecfg: &EndSolverConfig) -> Result<PropertyReport> {
    let g = &end.grid;
    let (alpha, sigma) = (end.alpha, end.sigma);
    let mut notes = Vec::new();
    let rc = (2.0 * alpha).sqrt();
    let n = g.len();

    let cone = (0..n).map(|i| g.y[i] - sigma * g.x[i]).fold(f64::INFINITY, f64::min);
    let mut u0_bound = PropertyCheck::from_margin(rc - end.u0());
    if end.degenerate.as_deref() == Some("cylinder") {
        notes.push("cylinder: equality case u(0) = sqrt(2α)".to_string());
        u0_bound = PropertyCheck { ok: false, margin: 0.0 };
    }

    let (mut lx, mut lv, mut ld) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let x = g.x[i];
        if x >= DECAY_WINDOW.0 && x <= DECAY_WINDOW.1 {
            lx.push(x.ln());
            lv.push((g.y[i] - sigma * x).abs().ln());
            ld.push((g.dy[i] - sigma).abs().ln());
        }
    }
    let (value_exp, slope_exp) = if lx.len() >= 2 && sigma > 0.0 {
        (fit_slope(&lx, &lv), fit_slope(&lx, &ld))
    } else {
        notes.push("decay window not covered by the grid".into());
        (f64::NAN, f64::NAN)
    };
    let window_margin = |e: f64, centre: f64| if e.is_finite() { 0.2 - (e - centre).abs() } else { f64::NEG_INFINITY };
    let value_decay = PropertyCheck::from_margin(window_margin(value_exp, -1.0));
    let slope_decay = PropertyCheck::from_margin(window_margin(slope_exp, -2.0));

    let mut mc = f64::INFINITY;
    for i in 0..n {
        let (x, u, du, ddu) = (g.x[i], g.y[i], g.dy[i], g.ddy[i]);
        let w = (1.0 + du * du).sqrt();
        let h = (alpha / u - ddu / (w * w)) / w;
        let psi = x * du - u;
        mc = mc.min(h).min(-psi);
        if (h > 0.0) != (psi < 0.0) {
            notes.push(format!("H and Psi disagree in sign at x = {x}"));
        }
    }

    let mut cv = f64::INFINITY;
    for i in 0..n {
        cv = cv.min(g.dy[i]).min(sigma - g.dy[i]);
        if i > 0 && i + 1 < n {
            cv = cv.min(g.ddy[i]);
        }
    }

    let identity = if sigma > 0.0 {
        let lo = g.x.iter().copied().find(|&x| x > 0.0).unwrap_or(ecfg.x_geometric);
        convexity_identity_residual(end, lo, end.x_max(), ecfg)?
    } else {
        0.0
    };

    let mut ratio = f64::INFINITY;
    for i in 1..n.saturating_sub(1) {
        if g.x[i] > 0.0 {
            ratio = ratio.min(g.y[i] / g.x[i] - g.y[i + 1] / g.x[i + 1]);
        }
    }

    Ok(PropertyReport {
        sigma,
        cone_domination: PropertyCheck::from_margin(cone),
        u0_bound,
        value_decay_exponent: value_exp,
        value_decay,
        slope_decay_exponent: slope_exp,
        slope_decay,
        mean_convexity: PropertyCheck::from_margin(mc),
        convexity: PropertyCheck::from_margin(cv),
        convexity_identity_residual: identity,
        convexity_identity: PropertyCheck::from_margin(IDENTITY_TOL - identity),
        ratio_decreasing: PropertyCheck::from_margin(ratio),
        residual: PropertyCheck::from_margin(RESIDUAL_TOL - end.residual),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_is_flagged() {
        let e = EndSolverConfig::default();
        let c = ConicalEnd::cylinder(1.0, &e).unwrap();
        let r = verify_end_properties(&c, &e).unwrap();
        assert!(r.notes.iter().any(|n| n == "cylinder: equality case u(0) = sqrt(2α)"));
        assert!(!r.u0_bound.ok);
    }
}
