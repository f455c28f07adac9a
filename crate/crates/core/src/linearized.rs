//! The linearization `g = df/dσ̂` of the r-graph equation at the plane,
//! `g'' = (r/2 - α/r) g' - g/2`, normalized to slope 1 at infinity.

use serde::{Deserialize, Serialize};

use crate::config::DomainConfig;
use crate::ends::{solve_end, EndSolverConfig};
use crate::error::{Error, Result};
use crate::geoflow::{integrate_geodesic, EventKind, GeodesicState, Window};
use crate::kernel::{kernel_table, AsymptoticTail, KernelProblem, Weight};
use crate::numerics::{brent, fit_slope, integral_defect, QuinticGrid};
use crate::ode::{integrate_to, Dopri5, StepControl};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedConfig {
    /// Seed radius for the backward integration.
    pub r_max: f64,
    pub r_min: f64,
    /// Uniform spacing on `[1, r_max]`.
    pub h: f64,
    /// Geometric nodes on `[r_min, 1)`.
    pub geometric_nodes: usize,
    pub tol: f64,
    /// Window of the least-squares fit of the seed coefficient.
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub quad_tail_eps: f64,
}

impl Default for LinearizedConfig {
    fn default() -> Self {
        Self {
            r_max: 40.0,
            r_min: 1e-3,
            h: 0.05,
            geometric_nodes: 400,
            tol: 1e-13,
            fit_lo: 0.1,
            fit_hi: 20.0,
            quad_tail_eps: 1e-14,
        }
    }
}

impl LinearizedConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_max", self.r_max),
            ("r_min", self.r_min),
            ("h", self.h),
            ("tol", self.tol),
            ("quad_tail_eps", self.quad_tail_eps),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive (got {v})")));
            }
        }
        if !(self.r_min < 1.0 && self.r_max > 1.0) {
            return Err(Error::InvalidInput("need r_min < 1 < r_max".into()));
        }
        if !(self.fit_lo >= self.r_min && self.fit_lo < self.fit_hi && self.fit_hi <= self.r_max) {
            return Err(Error::InvalidInput("fit window must lie inside [r_min, r_max]".into()));
        }
        Ok(())
    }

    fn nodes(&self) -> Vec<f64> {
        let m = self.geometric_nodes.max(1);
        let ratio = (1.0 / self.r_min).powf(1.0 / m as f64);
        let mut r: Vec<f64> = (0..m).map(|k| self.r_min * ratio.powi(k as i32)).collect();
        let n = ((self.r_max - 1.0) / self.h).round().max(1.0) as usize;
        r.extend((0..=n).map(|k| if k == n { self.r_max } else { 1.0 + (self.r_max - 1.0) * k as f64 / n as f64 }));
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedSolution {
    pub alpha: f64,
    /// `g`, `g'` and `g''` (from the equation) on `[r_min, r_max]`.
    pub grid: QuinticGrid,
    /// Seed coefficient in `g = r + c₁/r` at `r_max`.
    pub c1: f64,
    pub tail: AsymptoticTail,
    pub normalization: String,
    /// Identity residual on the fit window.
    pub identity_residual: f64,
    /// Equation defect on `[0.01, r_max]`.
    pub defect: f64,
}

#[inline]
fn rhs(alpha: f64, r: f64, g: f64, dg: f64) -> f64 {
    (0.5 * r - alpha / r) * dg - 0.5 * g
}

impl LinearizedSolution {
    /// `(g, g')` at `r`, using the tail beyond `r_max`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r > self.grid.x_max() {
            self.tail.eval(r)
        } else {
            self.grid.eval(r)
        }
    }

    pub fn sign_changes(&self) -> usize {
        self.grid.y.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.grid.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Zeros of `g`, refined by Brent's method.
    pub fn roots(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut out = Vec::new();
        for i in 0..g.len() - 1 {
            if (g.y[i] < 0.0) != (g.y[i + 1] < 0.0) {
                out.push(brent(|r| g.eval_in(i, r).0, g.x[i], g.x[i + 1], 1e-15, 1e-15, 200)?);
            }
        }
        Ok(out)
    }
}

/// Backward integration of `n` solutions with the given seeds at `r_max`,
/// sampled at `nodes` (ascending, last = `r_max`).
fn integrate_back(alpha: f64, nodes: &[f64], seeds: [[f64; 2]; 2], tol: f64) -> Result<Vec<[f64; 4]>> {
    let sys = |r: f64, y: &[f64; 4]| Some([y[1], rhs(alpha, r, y[0], y[1]), y[3], rhs(alpha, r, y[2], y[3])]);
    let n = nodes.len();
    let y0 = [seeds[0][0], seeds[0][1], seeds[1][0], seeds[1][1]];
    let mut out = vec![[0.0; 4]; n];
    out[n - 1] = y0;
    // Node to node, so every stored value is a step end rather than dense output.
    for i in (0..n - 1).rev() {
        out[i] = integrate_to(&sys, nodes[i + 1], out[i + 1], nodes[i], StepControl::new(tol, tol))?;
    }
    Ok(out)
}

fn grid_of(alpha: f64, r: &[f64], g: Vec<f64>, dg: Vec<f64>) -> Result<QuinticGrid> {
    let ddg = (0..r.len()).map(|i| rhs(alpha, r[i], g[i], dg[i])).collect();
    QuinticGrid::new(r.to_vec(), g, dg, ddg)
}

/// `∫_r^∞ t⁻² ∫_t^∞ g'(s) e^{(t²-s²)/4} ds dt` and the inner integral at the nodes.
fn identity_integrals(g: &QuinticGrid, tail: AsymptoticTail, tail_eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = KernelProblem { grid: g, tail: Some(tail), slope_in_q: false, weight: Weight::SlopeOverS, tail_eps };
    let k = kernel_table(&p)?.at_nodes();
    Ok((k.j, k.k))
}

/// Pointwise `g - (λr - αr ∫_r^∞ t⁻² ∫_t^∞ g' e^{(t²-s²)/4} ds dt)` at the nodes.
fn identity_defects(g: &QuinticGrid, tail: AsymptoticTail, alpha: f64, lambda: f64, tail_eps: f64) -> Result<Vec<f64>> {
    let (j, _) = identity_integrals(g, tail, tail_eps)?;
    Ok((0..g.len()).map(|i| g.y[i] - (lambda * g.x[i] - alpha * g.x[i] * j[i])).collect())
}

/// Sup over the nodes in `[lo, hi]` of the identity defect with inhomogeneous
/// term `λr`.
pub fn linearized_identity_residual(
    g: &QuinticGrid,
    tail: AsymptoticTail,
    alpha: f64,
    lambda: f64,
    lo: f64,
    hi: f64,
    tail_eps: f64,
) -> Result<f64> {
    let d = identity_defects(g, tail, alpha, lambda, tail_eps)?;
    Ok((0..g.len()).filter(|&i| g.x[i] >= lo && g.x[i] <= hi).map(|i| d[i].abs()).fold(0.0, f64::max))
}

pub fn solve_linearized(cfg: &DomainConfig, lcfg: &LinearizedConfig) -> Result<LinearizedSolution> {
    cfg.validate()?;
    lcfg.validate()?;
    let alpha = cfg.alpha;
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput("the linearized equation needs alpha > 0".into()));
    }
    let r = lcfg.nodes();
    let rm = lcfg.r_max;
    // g = g₀ + c₁ g₁ with seeds (R, 1) and (1/R, -1/R²).
    let ys = integrate_back(alpha, &r, [[rm, 1.0], [1.0 / rm, -1.0 / (rm * rm)]], lcfg.tol)?;
    let g0 = grid_of(alpha, &r, ys.iter().map(|y| y[0]).collect(), ys.iter().map(|y| y[1]).collect())?;
    let g1 = grid_of(alpha, &r, ys.iter().map(|y| y[2]).collect(), ys.iter().map(|y| y[3]).collect())?;
    let t0 = AsymptoticTail { slope: 1.0, a: 0.0, b: 0.0 };
    let t1 = AsymptoticTail { slope: 0.0, a: 1.0, b: 0.0 };
    let d0 = identity_defects(&g0, t0, alpha, 1.0, lcfg.quad_tail_eps)?;
    let d1 = identity_defects(&g1, t1, alpha, 0.0, lcfg.quad_tail_eps)?;
    // The defect is affine in c₁; least squares over the fit window.
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..r.len() {
        if r[i] >= lcfg.fit_lo && r[i] <= lcfg.fit_hi {
            num += d0[i] * d1[i];
            den += d1[i] * d1[i];
        }
    }
    if !(den > 0.0) {
        return Err(Error::NoConvergence("degenerate seed fit".into()));
    }
    let c1 = -num / den;
    let grid = grid_of(
        alpha,
        &r,
        (0..r.len()).map(|i| g0.y[i] + c1 * g1.y[i]).collect(),
        (0..r.len()).map(|i| g0.dy[i] + c1 * g1.dy[i]).collect(),
    )?;
    let tail = AsymptoticTail { slope: 1.0, a: c1, b: 0.0 };
    let identity_residual =
        linearized_identity_residual(&grid, tail, alpha, 1.0, lcfg.fit_lo, lcfg.fit_hi, lcfg.quad_tail_eps)?;
    let defect_grid = grid.restrict(0.01_f64.max(lcfg.r_min), rm)?;
    let defect = integral_defect(&defect_grid, |d| d, |r, g, dg| rhs(alpha, r, g, dg));
    Ok(LinearizedSolution {
        alpha,
        grid,
        c1,
        tail,
        normalization: "asymptotic slope 1 at infinity".into(),
        identity_residual,
        defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisLimitRow {
    pub r: f64,
    pub g: f64,
    /// `-α ∫_r^∞ g'(s) e^{-s²/4} ds`
    pub predicted: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisLimitReport {
    pub rows: Vec<AxisLimitRow>,
    pub tol: f64,
    /// True when the difference at the smallest radius is below `tol`.
    pub ok: bool,
}

/// Compares `g(r)` with `-α ∫_r^∞ g' e^{-s²/4} ds` at the nodes nearest to
/// `radii`, approaching the axis.
pub fn axis_limit_check(sol: &LinearizedSolution, radii: &[f64], tail_eps: f64, tol: f64) -> Result<AxisLimitReport> {
    let g = &sol.grid;
    let (_, k) = identity_integrals(g, sol.tail, tail_eps)?;
    let mut rows = Vec::new();
    for &r in radii {
        let i = (0..g.len())
            .min_by(|&a, &b| (g.x[a] - r).abs().total_cmp(&(g.x[b] - r).abs()))
            .ok_or_else(|| Error::GridTooShort("empty grid".into()))?;
        let x = g.x[i];
        let predicted = -sol.alpha * k[i] * (-0.25 * x * x).exp();
        rows.push(AxisLimitRow { r: x, g: g.y[i], predicted, difference: g.y[i] - predicted });
    }
    rows.sort_by(|a, b| b.r.total_cmp(&a.r));
    let ok = rows.last().is_some_and(|row| row.difference.abs() < tol);
    Ok(AxisLimitReport { rows, tol, ok })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaLimitRow {
    pub sigma_hat: f64,
    /// `sup |f/σ̂ - g|` on the window.
    pub sup_error: f64,
    /// Smallest `(1 - 2α/r²)⁻¹ - f'/σ̂` on the window.
    pub envelope_margin: f64,
    pub envelope_ok: bool,
    /// Most negative `x` on the r-graph continuation of the end through
    /// `x = 0`, with its radius and `σ̂ g` there.
    pub dip_x: f64,
    pub dip_r: f64,
    pub dip_predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaLimitReport {
    pub window: (f64, f64),
    pub rows: Vec<SigmaLimitRow>,
    /// `log2` of successive error ratios.
    pub orders: Vec<f64>,
    /// Least-squares slope of `log error` against `log σ̂`.
    pub fitted_order: f64,
}

pub const SIGMA_LIMIT_WINDOW: (f64, f64) = (3.0, 10.0);

/// Compares the inverse graphs `f_σ̂` of the ends with `σ̂ g` on a fixed
/// radius window for the given `σ̂` values.
pub fn sigma_limit_check(
    sol: &LinearizedSolution,
    sigma_hats: &[f64],
    cfg: &DomainConfig,
    ecfg: &EndSolverConfig,
) -> Result<SigmaLimitReport> {
    let alpha = cfg.alpha;
    let (lo, hi) = SIGMA_LIMIT_WINDOW;
    let env_from = 1.5 * (2.0 * alpha).sqrt();
    let m = 140;
    let mut rows = Vec::new();
    for &sh in sigma_hats {
        if !(sh > 0.0) {
            return Err(Error::InvalidInput(format!("sigma_hat must be positive (got {sh})")));
        }
        let end = solve_end(1.0 / sh, cfg, ecfg)?;
        let mut sup_error: f64 = 0.0;
        let mut envelope_margin = f64::INFINITY;
        for k in 0..=m {
            let r = lo + (hi - lo) * k as f64 / m as f64;
            let (x, dx) = end
                .inverse(r)
                .map_err(|e| Error::InvalidInput(format!("window not graphical over r for sigma_hat = {sh}: {e}")))?;
            sup_error = sup_error.max((x / sh - sol.eval(r).0).abs());
            if r > env_from {
                envelope_margin = envelope_margin.min(1.0 / (1.0 - 2.0 * alpha / (r * r)) - dx / sh);
            }
        }
        let (u0, du0) = end.eval(0.0);
        let init = GeodesicState::new(0.0, 0.0, u0, du0.atan() + std::f64::consts::PI);
        let curve = integrate_geodesic(init, 2.0, &Window::new(-50.0, 50.0, 50.0), cfg)?;
        // The continuation stays an r-graph up to its first horizontal point.
        let s_cut = curve.events.iter().find(|e| e.kind == EventKind::Horizontal).map_or(curve.s_end(), |e| e.s);
        let dip = curve
            .samples
            .iter()
            .map(|s| s.state)
            .filter(|st| st.s <= s_cut)
            .min_by(|a, b| a.x.total_cmp(&b.x))
            .ok_or_else(|| Error::GridTooShort("empty continuation".into()))?;
        rows.push(SigmaLimitRow {
            sigma_hat: sh,
            sup_error,
            envelope_margin,
            envelope_ok: envelope_margin > 0.0,
            dip_x: dip.x,
            dip_r: dip.r,
            dip_predicted: sh * sol.eval(dip.r.max(sol.grid.x_min())).0,
        });
    }
    let orders = rows
        .windows(2)
        .map(|w| (w[0].sup_error / w[1].sup_error).ln() / (w[0].sigma_hat / w[1].sigma_hat).ln())
        .collect();
    let lx: Vec<f64> = rows.iter().map(|r| r.sigma_hat.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.sup_error.ln()).collect();
    let fitted_order = if rows.len() >= 2 { fit_slope(&lx, &ly) } else { f64::NAN };
    Ok(SigmaLimitReport { window: SIGMA_LIMIT_WINDOW, rows, orders, fitted_order })
}

/// Forward solution of the linearized equation from `(r0, g0, g0')` to `r1`,
/// returned as `(r, g, g')` at every accepted step.
pub fn forward_linearized(alpha: f64, r0: f64, g0: f64, dg0: f64, r1: f64, tol: f64) -> Result<Vec<(f64, f64, f64)>> {
    if !(r0 > 0.0 && r1 > r0) {
        return Err(Error::InvalidInput("need 0 < r0 < r1".into()));
    }
    let sys = |r: f64, y: &[f64; 2]| Some([y[1], rhs(alpha, r, y[0], y[1])]);
    let mut st = Dopri5::new(&sys, r0, [g0, dg0], r1, StepControl::new(tol, tol))?;
    let mut out = vec![(r0, g0, dg0)];
    while let Some(seg) = st.step()? {
        out.push((seg.t1, seg.y1[0], seg.y1[1]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_bad_window() {
        let c = LinearizedConfig { fit_hi: 100.0, ..Default::default() };
        assert!(c.validate().is_err());
        assert!(LinearizedConfig::default().validate().is_ok());
    }

    #[test]
    fn line_is_not_a_solution() {
        let r: Vec<f64> = (0..=400).map(|k| 0.1 + 0.1 * k as f64).collect();
        let n = r.len();
        let g =
            QuinticGrid::new(r, (0..n).map(|k| 0.1 + 0.1 * k as f64).collect(), vec![1.0; n], vec![0.0; n]).unwrap();
        let t = AsymptoticTail { slope: 1.0, a: 0.0, b: 0.0 };
        let res = linearized_identity_residual(&g, t, 1.0, 1.0, 0.1, 5.0, 1e-14).unwrap();
        assert!(res > 0.05, "{res}");
    }
}
