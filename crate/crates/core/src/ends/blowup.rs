use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::check_sigma;
use crate::config::DomainConfig;
use crate::error::{Error, Result};
use crate::geoflow::{integrate_geodesic, EventKind, GeodesicState, Window};

/// Forward run from conical data `u(x0) = σx0`, `u'(x0) = σ` to the first
/// vertical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub sigma: f64,
    pub x0: f64,
    /// `x` at the vertical point.
    pub x_inf: f64,
    /// `(σx0/α)(π/2 - arctan σ) + x0`.
    pub vertical_bound: f64,
    pub vertical_bound_ok: bool,
    /// `(1 + 1/α)x0`, present when `σx0 ≥ sqrt(2α)`.
    pub cylinder_bound: Option<f64>,
    pub cylinder_bound_ok: Option<bool>,
    /// `u' ≥ tan[α(x - x0)/(σx0) + arctan σ]` at every graphical sample.
    pub tangent_bound_ok: bool,
    /// Smallest `u' - tan[...]` over the checked points.
    pub tangent_margin: f64,
    pub tangent_points: usize,
    /// `Ψ' > Ψ/2 ≥ 0` at every graphical sample.
    pub psi_monotone_ok: bool,
}

/// Graph slopes beyond this are treated as already vertical.
const MAX_SLOPE: f64 = 1e6;

pub fn blowup_experiment(sigma: f64, x0: f64, cfg: &DomainConfig) -> Result<BlowupReport> {
    check_sigma(sigma)?;
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::InvalidInput(format!("x0 must be positive (got {x0})")));
    }
    let alpha = cfg.alpha;
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput("blow-up needs alpha > 0".into()));
    }
    let vertical_bound = (sigma * x0 / alpha) * (FRAC_PI_2 - sigma.atan()) + x0;
    let reach = vertical_bound - x0 + 10.0;
    let budget = 4.0 * reach * (1.0 + sigma * sigma).sqrt() + 4.0 * sigma * x0 + 100.0;
    let window = Window::new(-1e4, x0 + 100.0 * reach, 1e4 + 100.0 * sigma * x0);
    let init = GeodesicState::new(0.0, x0, sigma * x0, sigma.atan());
    let curve = integrate_geodesic(init, budget, &window, cfg)?;
    let Some(v) = curve.events.iter().find(|e| e.kind == EventKind::Vertical) else {
        return Err(Error::NoConvergence(format!(
            "no vertical point within arclength {} ({:?})",
            curve.length(),
            curve.termination
        )));
    };
    let x_inf = v.x;

    let angle_bound = |x: f64| alpha * (x - x0) / (sigma * x0) + sigma.atan();
    let mut tangent_bound_ok = true;
    let mut tangent_margin = f64::INFINITY;
    let mut tangent_points = 0;
    let mut psi_monotone_ok = true;
    for i in 0..curve.len() {
        let smp = &curve.samples[i];
        if smp.state.s > v.s {
            break;
        }
        let mut pts = vec![smp.state.s];
        if i + 1 < curve.len() && curve.samples[i + 1].state.s <= v.s {
            let (a, b) = (smp.state.s, curve.samples[i + 1].state.s);
            pts.extend((1..4).map(|k| a + (b - a) * k as f64 / 4.0));
        }
        for s in pts {
            let (x, _, theta) = curve.state_at(s);
            let (c, sn) = (theta.cos(), theta.sin());
            if c <= 0.0 || sn / c > MAX_SLOPE {
                continue;
            }
            let du = sn / c;
            let phase = angle_bound(x);
            tangent_points += 1;
            if phase >= FRAC_PI_2 {
                tangent_bound_ok = false;
                tangent_margin = f64::NEG_INFINITY;
                continue;
            }
            let lower = phase.tan();
            let margin = du - lower;
            tangent_margin = tangent_margin.min(margin);
            if margin < -1e-9 * lower.abs().max(1.0) {
                tangent_bound_ok = false;
            }
        }
        let c = smp.state.theta.cos();
        if c > 0.0 && smp.state.theta.sin() / c <= MAX_SLOPE {
            let psi = smp.scalars.psi;
            let ddu = smp.scalars.kappa / c.powi(3);
            let dpsi = smp.state.x * ddu;
            let tol = 1e-9 * (1.0 + psi.abs());
            if psi < -tol || dpsi <= 0.5 * psi - tol {
                psi_monotone_ok = false;
            }
        }
    }

    let (cylinder_bound, cylinder_bound_ok) = if sigma * x0 >= (2.0 * alpha).sqrt() * (1.0 - 1e-12) {
        let b = (1.0 + 1.0 / alpha) * x0;
        (Some(b), Some(x_inf <= b))
    } else {
        (None, None)
    };
    Ok(BlowupReport {
        sigma,
        x0,
        x_inf,
        vertical_bound,
        vertical_bound_ok: x_inf < vertical_bound,
        cylinder_bound,
        cylinder_bound_ok,
        tangent_bound_ok,
        tangent_margin,
        tangent_points,
        psi_monotone_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_hold_on_cylinder_start() {
        let cfg = DomainConfig::for_dimension(2);
        let r = blowup_experiment(2f64.sqrt(), 1.0, &cfg).unwrap();
        assert!(r.x_inf > 1.0 && r.x_inf <= 2.0, "{}", r.x_inf);
        assert_eq!(r.cylinder_bound_ok, Some(true));
        assert!(r.vertical_bound_ok && r.tangent_bound_ok && r.psi_monotone_ok, "{r:?}");
    }

    #[test]
    fn finite_for_unit_slope() {
        let cfg = DomainConfig::for_dimension(2);
        let r = blowup_experiment(1.0, 5.0, &cfg).unwrap();
        assert!(r.x_inf < 5.0 * std::f64::consts::FRAC_PI_4 + 5.0);
        assert!(r.tangent_bound_ok, "{r:?}");
    }
}
