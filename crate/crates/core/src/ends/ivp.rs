use rayon::prelude::*;

use super::{check_sigma, graph_grid, ssode, ConicalEnd, EndSolverConfig};
use crate::config::DomainConfig;
use crate::error::{Error, Result};
use crate::geoflow::{integrate_geodesic, EventKind, GeodesicState, ProfileCurve, Window};
use crate::numerics::{integral_defect, QuinticGrid};
use crate::ode::{Dopri5, StepControl};

/// Solution of the initial value problem `u(a) = σa`, `u'(a) = σ`,
/// integrated back to `x = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IvpTable {
    pub sigma: f64,
    pub a: f64,
    /// Grid nodes inside `[0, a]` (with `a` itself as the last node).
    pub grid: QuinticGrid,
    /// `max (|u - σx| - 2α/(σx))` over step points with `x ≥ 1`;
    /// non-positive when the envelope holds.
    pub envelope_excess: f64,
    /// `max |u - σx| · σx / (2α)` over the same points.
    pub envelope_ratio: f64,
}

/// Integrates the graph equation backward from `x = a` with conical data.
pub fn solve_end_ivp(sigma: f64, a: f64, cfg: &DomainConfig, ecfg: &EndSolverConfig) -> Result<IvpTable> {
    check_sigma(sigma)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidInput(format!("anchor a must be positive (got {a})")));
    }
    cfg.validate()?;
    ecfg.validate()?;
    let mut nodes: Vec<f64> = ecfg.grid_nodes().into_iter().filter(|&x| x < a * (1.0 - 1e-14)).collect();
    nodes.push(a);
    let (x, u, du, excess, ratio) = integrate_back(cfg.alpha, a, sigma * a, sigma, &nodes, sigma, ecfg.ivp_tol)?;
    Ok(IvpTable { sigma, a, grid: graph_grid(cfg.alpha, x, u, du)?, envelope_excess: excess, envelope_ratio: ratio })
}

type Columns = (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64);

/// Backward integration from `x0` with `(u0, du0)` down to `x = 0`,
/// sampled at `nodes` (ascending, last node = `x0`).
fn integrate_back(alpha: f64, x0: f64, u0: f64, du0: f64, nodes: &[f64], sigma: f64, tol: f64) -> Result<Columns> {
    let sys = |x: f64, y: &[f64; 2]| if y[0] > 0.0 { Some([y[1], ssode(alpha, x, y[0], y[1])]) } else { None };
    let ctl = StepControl::new(tol, tol);
    let mut st = Dopri5::new(&sys, x0, [u0, du0], 0.0, ctl)?;
    let n = nodes.len();
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    u[n - 1] = u0;
    du[n - 1] = du0;
    let mut next = n as isize - 2;
    let mut excess = f64::NEG_INFINITY;
    let mut ratio: f64 = 0.0;
    let mut envelope = |x: f64, u: f64| {
        if x >= 1.0 {
            let dev = (u - sigma * x).abs();
            let bound = 2.0 * alpha / (sigma * x);
            excess = excess.max(dev - bound);
            ratio = ratio.max(dev / bound);
        }
    };
    envelope(x0, u0);
    while let Some(seg) = st.step()? {
        while next >= 0 && nodes[next as usize] >= seg.t1 {
            let xn = nodes[next as usize];
            let y = if xn == seg.t1 { seg.y1 } else { seg.eval(xn) };
            u[next as usize] = y[0];
            du[next as usize] = y[1];
            next -= 1;
        }
        envelope(seg.t1, seg.y1[0]);
    }
    if next >= 0 {
        return Err(Error::NoConvergence("backward integration stopped before x = 0".into()));
    }
    Ok((nodes.to_vec(), u, du, excess, ratio))
}

/// Builds `u_σ` on `[0, x_max]` from the initial value problems along the
/// anchor schedule with Richardson extrapolation in `1/a²`.
pub fn solve_end(sigma: f64, cfg: &DomainConfig, ecfg: &EndSolverConfig) -> Result<ConicalEnd> {
    check_sigma(sigma)?;
    cfg.validate()?;
    ecfg.validate()?;
    let alpha = cfg.alpha;
    let nodes = ecfg.grid_nodes();
    if alpha == 0.0 {
        let n = nodes.len();
        let grid =
            QuinticGrid::new(nodes.clone(), nodes.iter().map(|x| sigma * x).collect(), vec![sigma; n], vec![0.0; n])?;
        return Ok(ConicalEnd {
            alpha,
            sigma,
            grid,
            a_used: Vec::new(),
            u0_history: vec![0.0],
            picard: None,
            residual: 0.0,
            degenerate: Some("ray".into()),
        });
    }
    let sched = &ecfg.a_schedule;
    if sched[0] < ecfg.x_max {
        return Err(Error::InvalidInput(format!("first anchor {} must not be below x_max = {}", sched[0], ecfg.x_max)));
    }
    let need = (ecfg.min_doublings + 1).min(sched.len());
    if need < 2 {
        return Err(Error::InvalidInput("a_schedule needs at least two anchors".into()));
    }
    let first: Vec<Result<IvpTable>> = sched[..need].par_iter().map(|&a| solve_end_ivp(sigma, a, cfg, ecfg)).collect();
    let mut tables = Vec::new();
    for t in first {
        tables.push(restrict_to(t?, &nodes)?);
    }
    let extrapolate = |lo: &QuinticGrid, hi: &QuinticGrid, k: usize| -> (f64, f64) {
        ((4.0 * hi.y[k] - lo.y[k]) / 3.0, (4.0 * hi.dy[k] - lo.dy[k]) / 3.0)
    };
    let mut history: Vec<f64> = (1..tables.len()).map(|k| extrapolate(&tables[k - 1], &tables[k], 0).0).collect();
    let mut converged = false;
    loop {
        let m = history.len();
        if m >= ecfg.min_doublings.max(2) && (history[m - 1] - history[m - 2]).abs() < ecfg.richardson_tol {
            converged = true;
            break;
        }
        if tables.len() >= sched.len() {
            break;
        }
        let a = sched[tables.len()];
        let t = restrict_to(solve_end_ivp(sigma, a, cfg, ecfg)?, &nodes)?;
        tables.push(t);
        let k = tables.len() - 1;
        history.push(extrapolate(&tables[k - 1], &tables[k], 0).0);
    }
    let a_used: Vec<f64> = sched[..tables.len()].to_vec();
    if !converged {
        return Err(Error::NoConvergence(format!(
            "extrapolated u(0) not stable to {:e} after anchors {:?} (history {:?})",
            ecfg.richardson_tol, a_used, history
        )));
    }
    let k = tables.len() - 1;
    let last = nodes.len() - 1;
    let (u_end, du_end) = extrapolate(&tables[k - 1], &tables[k], last);
    let (x, u, du, _, _) = integrate_back(alpha, nodes[last], u_end, du_end, &nodes, sigma, ecfg.ivp_tol)?;
    let grid = graph_grid(alpha, x, u, du)?;
    // Measured in angle form, (atan u')' = Ψ/2 + α/u.
    let residual = integral_defect(&grid, f64::atan, |x, u, du| ssode(alpha, x, u, du) / (1.0 + du * du));
    log::debug!("end sigma={sigma}: u(0)={} anchors={:?} residual={residual:e}", grid.y[0], a_used);
    let end = ConicalEnd { alpha, sigma, grid, a_used, u0_history: history, picard: None, residual, degenerate: None };
    super::properties::check_invariants(&end)?;
    Ok(end)
}

fn restrict_to(t: IvpTable, nodes: &[f64]) -> Result<QuinticGrid> {
    let g = t.grid;
    let keep: Vec<usize> = (0..g.len()).filter(|&i| nodes.binary_search_by(|v| v.total_cmp(&g.x[i])).is_ok()).collect();
    if keep.len() != nodes.len() {
        return Err(Error::GridTooShort(format!("anchor {} does not cover the grid", t.a)));
    }
    QuinticGrid::new(
        keep.iter().map(|&i| g.x[i]).collect(),
        keep.iter().map(|&i| g.y[i]).collect(),
        keep.iter().map(|&i| g.dy[i]).collect(),
        keep.iter().map(|&i| g.ddy[i]).collect(),
    )
}

/// The maximal geodesic through the end: starts on the graph at `x_start`,
/// runs toward smaller `x` through the graph and beyond, and stops
/// `past_vertical` units of arclength after its first vertical point.
pub fn extend_maximal(end: &ConicalEnd, x_start: f64, past_vertical: f64, cfg: &DomainConfig) -> Result<ProfileCurve> {
    if !(x_start > 0.0 && x_start <= end.x_max()) {
        return Err(Error::InvalidInput(format!("x_start must lie in (0, {}]", end.x_max())));
    }
    let (u, du) = end.eval(x_start);
    let init = GeodesicState::new(0.0, x_start, u, du.atan() + std::f64::consts::PI);
    let budget = 4.0 * x_start * (1.0 + end.sigma * end.sigma).sqrt() + past_vertical + 100.0;
    let window = Window::new(-1e3, 1e3, 1e3);
    let curve = integrate_geodesic(init, budget, &window, cfg)?;
    let Some(v) = curve.events.iter().find(|e| e.kind == EventKind::Vertical) else {
        return Err(Error::InvariantViolated(format!(
            "no vertical point within arclength {} ({:?})",
            curve.length(),
            curve.termination
        )));
    };
    let stop = v.s + past_vertical;
    if stop >= curve.s_end() {
        return Ok(curve);
    }
    curve.truncated(curve.s_start(), stop, cfg)
}
