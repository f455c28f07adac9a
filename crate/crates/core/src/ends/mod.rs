//! Asymptotically conical ends `u_σ`: graphs `r = u(x)` over `[0, ∞)` with
//! `u(x) - σx → 0`, built as limits of initial value problems and
//! independently as fixed points of an integral operator.

mod blowup;
mod identity;
mod ivp;
mod picard;
mod properties;

use serde::{Deserialize, Serialize};

use crate::config::DomainConfig;
use crate::error::{Error, Result};
use crate::geoflow::{CurveSample, ProfileCurve, Termination};
use crate::kernel::AsymptoticTail;
use crate::numerics::{gl5, QuinticGrid};

pub use blowup::{blowup_experiment, BlowupReport};
pub use identity::{convexity_identity_residual, evaluate_general_identity, long_identity_residual, GeneralIdentity};
pub use ivp::{extend_maximal, solve_end, solve_end_ivp, IvpTable};
pub use picard::{apply_s, apply_t, default_b, picard_solve, picard_solve_with_b, OperatorOutput, PicardSolution};
pub use properties::{verify_end_properties, PropertyCheck, PropertyReport};

/// Numerical settings for the end constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndSolverConfig {
    /// Anchors `a` for the initial value problems, strictly increasing.
    pub a_schedule: Vec<f64>,
    /// Stop once successive extrapolated `u(0)` differ by less than this.
    pub richardson_tol: f64,
    /// Minimum number of doublings before the stop test applies.
    pub min_doublings: usize,
    /// Start of the Picard domain; `None` uses [`default_b`].
    pub picard_b: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// How many times `b` may be doubled after a divergent run.
    pub picard_b_doublings: usize,
    /// `e^{-w}` below this is dropped from the inner integrals.
    pub quad_tail_eps: f64,
    pub x_max: f64,
    /// Uniform spacing on `[1, x_max]`.
    pub h: f64,
    /// First positive node; geometric spacing from here to 1.
    pub x_geometric: f64,
    pub geometric_nodes: usize,
    /// Tolerance of the initial value problems.
    pub ivp_tol: f64,
}

impl Default for EndSolverConfig {
    fn default() -> Self {
        Self {
            a_schedule: (0..8).map(|k| 100.0 * 2f64.powi(k)).collect(),
            richardson_tol: 1e-8,
            min_doublings: 2,
            picard_b: None,
            picard_tol: 1e-10,
            picard_max_iter: 200,
            picard_b_doublings: 4,
            quad_tail_eps: 1e-14,
            x_max: 50.0,
            h: 0.05,
            x_geometric: 1e-3,
            geometric_nodes: 160,
            ivp_tol: 1e-13,
        }
    }
}

impl EndSolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("richardson_tol", self.richardson_tol),
            ("picard_tol", self.picard_tol),
            ("quad_tail_eps", self.quad_tail_eps),
            ("x_max", self.x_max),
            ("h", self.h),
            ("x_geometric", self.x_geometric),
            ("ivp_tol", self.ivp_tol),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive (got {v})")));
            }
        }
        if self.quad_tail_eps >= 1.0 {
            return Err(Error::InvalidInput("quad_tail_eps must be below 1".into()));
        }
        if self.a_schedule.is_empty() || self.a_schedule.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidInput("a_schedule must hold positive anchors".into()));
        }
        if self.a_schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("a_schedule must be strictly increasing".into()));
        }
        if let Some(b) = self.picard_b {
            if !(b > 0.0 && b < self.x_max) {
                return Err(Error::InvalidInput(format!("picard_b must lie in (0, x_max) (got {b})")));
            }
        }
        if self.x_geometric >= 1.0 || self.x_max <= 1.0 {
            return Err(Error::InvalidInput("grid needs x_geometric < 1 < x_max".into()));
        }
        Ok(())
    }

    /// Nodes `0`, geometric on `[x_geometric, 1)`, uniform on `[1, x_max]`.
    pub fn grid_nodes(&self) -> Vec<f64> {
        let mut x = vec![0.0];
        let m = self.geometric_nodes.max(1);
        let ratio = (1.0 / self.x_geometric).powf(1.0 / m as f64);
        for k in 0..m {
            x.push(self.x_geometric * ratio.powi(k as i32));
        }
        let n = ((self.x_max - 1.0) / self.h).round().max(1.0) as usize;
        for k in 0..=n {
            x.push(if k == n { self.x_max } else { 1.0 + (self.x_max - 1.0) * k as f64 / n as f64 });
        }
        x
    }
}

/// Record of a Picard run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardRecord {
    pub b: f64,
    pub iterations: usize,
    /// C¹ norm of the last update.
    pub final_step: f64,
    /// Largest ratio of successive update norms.
    pub tau_hat: f64,
    pub steps: Vec<f64>,
}

/// A computed end `u_σ` on `[0, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicalEnd {
    pub alpha: f64,
    pub sigma: f64,
    /// `u`, `u'` and `u''` (the latter from the equation) at the nodes.
    pub grid: QuinticGrid,
    pub a_used: Vec<f64>,
    /// Extrapolated `u(0)` after each doubling.
    pub u0_history: Vec<f64>,
    pub picard: Option<PicardRecord>,
    /// Largest interval-averaged defect of the graph equation in angle form.
    pub residual: f64,
    /// Set for the explicit degenerate members (cylinder, exact ray).
    pub degenerate: Option<String>,
}

impl ConicalEnd {
    /// The cylinder `u ≡ sqrt(2α)`, the `σ = 0` member of the family.
    pub fn cylinder(alpha: f64, ecfg: &EndSolverConfig) -> Result<Self> {
        let x = ecfg.grid_nodes();
        let n = x.len();
        let rc = (2.0 * alpha).sqrt();
        Ok(Self {
            alpha,
            sigma: 0.0,
            grid: QuinticGrid::new(x, vec![rc; n], vec![0.0; n], vec![0.0; n])?,
            a_used: Vec::new(),
            u0_history: Vec::new(),
            picard: None,
            residual: 0.0,
            degenerate: Some("cylinder".into()),
        })
    }

    pub fn u0(&self) -> f64 {
        self.grid.y[0]
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max()
    }

    /// `(u, u')` at `x`; beyond the grid the asymptotic tail is used.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x > self.x_max() && self.sigma > 0.0 {
            self.tail().eval(x)
        } else {
            self.grid.eval(x)
        }
    }

    /// `u = σx + a/x + b/x³` matched at the last node.
    pub fn tail(&self) -> AsymptoticTail {
        let n = self.grid.len() - 1;
        AsymptoticTail::fit(self.sigma, self.grid.x[n], self.grid.y[n], self.grid.dy[n])
    }

    /// Inverse graph: `x = f(r)` and `f'(r)` for `u(0) ≤ r ≤ u(x_max)`.
    pub fn inverse(&self, r: f64) -> Result<(f64, f64)> {
        let g = &self.grid;
        let n = g.len();
        if !(r >= g.y[0] && r <= g.y[n - 1]) {
            return Err(Error::InvalidInput(format!(
                "radius {r} outside [{}, {}] covered by the end",
                g.y[0],
                g.y[n - 1]
            )));
        }
        let i = g.y.partition_point(|&v| v <= r).clamp(1, n - 1) - 1;
        let (mut lo, mut hi) = (g.x[i], g.x[i + 1]);
        let mut x = lo + (hi - lo) * (r - g.y[i]) / (g.y[i + 1] - g.y[i]);
        for _ in 0..100 {
            let (u, du) = g.eval_in(i, x);
            let f = u - r;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - f / du;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-16 * x.abs().max(1.0) {
                x = next;
                break;
            }
            x = next;
        }
        let (_, du) = g.eval_in(i, x);
        Ok((x, 1.0 / du))
    }

    /// Inverse graph `x = f(r)` sampled at the nodes with `x ≥ x_lo`, with
    /// the matching tail `f = r/σ + a/r + b/r³`.
    pub fn inverse_grid(&self, x_lo: f64) -> Result<(QuinticGrid, AsymptoticTail)> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidInput("inverse graph needs sigma > 0".into()));
        }
        let g = &self.grid;
        let idx: Vec<usize> = (0..g.len()).filter(|&i| g.x[i] >= x_lo && g.dy[i] > 0.0).collect();
        if idx.len() < 2 {
            return Err(Error::GridTooShort(format!("no inverse graph above x = {x_lo}")));
        }
        let f = QuinticGrid::new(
            idx.iter().map(|&i| g.y[i]).collect(),
            idx.iter().map(|&i| g.x[i]).collect(),
            idx.iter().map(|&i| 1.0 / g.dy[i]).collect(),
            idx.iter().map(|&i| -g.ddy[i] / g.dy[i].powi(3)).collect(),
        )?;
        let n = f.len() - 1;
        let tail = AsymptoticTail::fit(1.0 / self.sigma, f.x[n], f.y[n], f.dy[n]);
        Ok((f, tail))
    }

    /// The end as an arclength-parametrized profile curve starting at `x = 0`.
    pub fn to_profile_curve(&self, x_hi: f64, cfg: &DomainConfig) -> Result<ProfileCurve> {
        let g = &self.grid;
        let mut samples = Vec::new();
        let mut s = 0.0;
        let push = |samples: &mut Vec<CurveSample>, s: f64, x: f64, u: f64, du: f64| {
            samples.push(CurveSample::on_geodesic(s, x, u, du.atan(), self.alpha));
        };
        push(&mut samples, 0.0, g.x[0], g.y[0], g.dy[0]);
        for i in 0..g.len() - 1 {
            let (a, b) = (g.x[i], g.x[i + 1].min(x_hi));
            if a >= x_hi {
                break;
            }
            let len = gl5(a, b, |x| (1.0 + g.eval_in(i, x).1.powi(2)).sqrt());
            let m = (len / (0.9 * cfg.max_step)).ceil().max(1.0) as usize;
            let mut xa = a;
            for k in 1..=m {
                let xb = a + (b - a) * k as f64 / m as f64;
                s += gl5(xa, xb, |x| (1.0 + g.eval_in(i, x).1.powi(2)).sqrt());
                let (u, du) = g.eval_in(i, xb);
                push(&mut samples, s, xb, u, du);
                xa = xb;
            }
        }
        ProfileCurve::from_samples(samples, Termination::ReachedMaxLength, false, cfg)
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("sigma must be positive (got {sigma})")));
    }
    Ok(())
}

/// Quintic grid for `u'' = F(x, u, u')` from nodes with `u`, `u'`.
pub(crate) fn graph_grid(alpha: f64, x: Vec<f64>, u: Vec<f64>, du: Vec<f64>) -> Result<QuinticGrid> {
    let ddu = x.iter().zip(u.iter().zip(&du)).map(|(&x, (&u, &du))| ssode(alpha, x, u, du)).collect();
    QuinticGrid::new(x, u, du, ddu)
}

#[inline]
pub(crate) fn ssode(alpha: f64, x: f64, u: f64, du: f64) -> f64 {
    (0.5 * x * du + alpha / u - 0.5 * u) * (1.0 + du * du)
}
