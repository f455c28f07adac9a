//! Census of vertical and horizontal points, self-intersection search,
//! closed-geodesic shooting and verdicts for complete profile curves.

mod census;
mod intersect;
mod torus;

use serde::{Deserialize, Serialize};

pub use census::{census, Census, HorizontalPoint, Quadrant, QuadrantCounts, VerticalPoint};
pub use intersect::{polyline_intersections, self_intersection, self_intersections, Intersection, PolylineHit};
pub use torus::{brackets, find_torus, scan_closed, shoot_closed, ClosedShot, ShotStatus, TorusReport};

use crate::config::DomainConfig;
use crate::error::{Error, Result};
use crate::geoflow::{tangent, DegenerateLine, EventKind, ProfileCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Target for `|sin θ|` at the closing crossing of a shot.
    pub closure_tol: f64,
    /// Largest closure gap of a curve accepted as closed.
    pub closure_gap_tol: f64,
    /// Membership tolerance for the sphere, cylinder and r-axis.
    pub membership_tol: f64,
    /// Fraction of arclength at the end used for the conical tail fit.
    pub tail_fraction: f64,
    /// The tail fit needs `|x|` above this on the whole window.
    pub tail_min_x: f64,
    pub tail_fit_tol: f64,
    /// Arclength budget and half-width of the window for one shot.
    pub shot_length: f64,
    pub shot_window: f64,
    pub max_iter: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            closure_tol: 1e-10,
            closure_gap_tol: 1e-8,
            membership_tol: 1e-6,
            tail_fraction: 0.3,
            tail_min_x: 5.0,
            tail_fit_tol: 1e-6,
            shot_length: 50.0,
            shot_window: 20.0,
            max_iter: 200,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("closure_tol", self.closure_tol),
            ("closure_gap_tol", self.closure_gap_tol),
            ("membership_tol", self.membership_tol),
            ("tail_min_x", self.tail_min_x),
            ("tail_fit_tol", self.tail_fit_tol),
            ("shot_length", self.shot_length),
            ("shot_window", self.shot_window),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive (got {v})")));
            }
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::InvalidInput(format!("tail_fraction must lie in (0, 1] (got {})", self.tail_fraction)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    RAxis,
    Cylinder,
    Sphere,
    ClosedTwoCrossings,
    ConicalEnd { sigma_hat: f64 },
    NonEmbedded,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::RAxis => "r_axis",
            Verdict::Cylinder => "cylinder",
            Verdict::Sphere => "sphere",
            Verdict::ClosedTwoCrossings => "closed_two_crossings",
            Verdict::ConicalEnd { .. } => "conical_end",
            Verdict::NonEmbedded => "non_embedded",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Least-squares fit `r = σ|x| + A/|x| + B/|x|³` on the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub sigma_hat: f64,
    pub a: f64,
    pub b: f64,
    pub max_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub census: Census,
    pub self_intersection: Option<Intersection>,
    pub closure_gap: f64,
    /// `max |x² + r² - 2(α+1)|` over the samples.
    pub sphere_deviation: f64,
    pub tail_fit: Option<TailFit>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Census, self-intersection search and a verdict for a complete curve.
pub fn classify(curve: &ProfileCurve, cfg: &DomainConfig, ccfg: &ClassifierConfig) -> ClassificationReport {
    let census = census(curve, cfg);
    let alpha = curve.alpha;
    let closure_gap = curve.closure_gap();
    let rs = 2.0 * (alpha + 1.0);
    let sphere_deviation =
        curve.samples.iter().map(|p| (p.state.x * p.state.x + p.state.r * p.state.r - rs).abs()).fold(0.0, f64::max);
    let mut notes = Vec::new();
    let report = |verdict, self_intersection, tail_fit, notes| ClassificationReport {
        census: census.clone(),
        self_intersection,
        closure_gap,
        sphere_deviation,
        tail_fit,
        verdict,
        notes,
    };

    match census.degenerate {
        Some(DegenerateLine::RAxis) => return report(Verdict::RAxis, None, None, notes),
        Some(DegenerateLine::Cylinder) => return report(Verdict::Cylinder, None, None, notes),
        None => {}
    }
    if sphere_deviation < ccfg.membership_tol {
        return report(Verdict::Sphere, None, None, notes);
    }
    let hit = self_intersection(curve);
    if curve.closed && closure_gap < ccfg.closure_gap_tol && census.raxis_crossings == 2 {
        if hit.is_some() {
            notes.push("closed curve with a self-intersection".into());
            return report(Verdict::NonEmbedded, hit, None, notes);
        }
        return report(Verdict::ClosedTwoCrossings, None, None, notes);
    }
    if hit.is_some() {
        return report(Verdict::NonEmbedded, hit, None, notes);
    }
    let fit = tail_fit(curve, ccfg);
    match fit {
        Some(f) if f.max_residual < ccfg.tail_fit_tol && f.sigma_hat > 0.0 => {
            report(Verdict::ConicalEnd { sigma_hat: f.sigma_hat }, None, fit, notes)
        }
        _ => {
            notes.push("no rule applies".into());
            report(Verdict::Inconclusive, None, fit, notes)
        }
    }
}

/// Tail fit on the last `tail_fraction` of arclength, provided the tail is a
/// graph over `x` with `|x| > tail_min_x` and does not meet the axis.
pub fn tail_fit(curve: &ProfileCurve, ccfg: &ClassifierConfig) -> Option<TailFit> {
    let s_cut = curve.s_end() - ccfg.tail_fraction * curve.length();
    let tail: Vec<_> = curve.samples.iter().filter(|p| p.state.s >= s_cut).map(|p| p.state).collect();
    if tail.len() < 6 {
        return None;
    }
    let dir = tangent(tail[0].theta).0.signum();
    let graph = tail.iter().all(|p| tangent(p.theta).0 * dir > 0.0 && p.x.abs() > ccfg.tail_min_x && p.r > 0.0);
    if !graph || curve.events.iter().any(|e| e.s > s_cut && e.kind == EventKind::Vertical) {
        return None;
    }
    let scale = tail.iter().map(|p| p.x.abs()).fold(0.0, f64::max);
    let rows: Vec<([f64; 3], f64)> = tail
        .iter()
        .map(|p| {
            let t = p.x.abs() / scale;
            ([t, 1.0 / t, 1.0 / (t * t * t)], p.r / scale)
        })
        .collect();
    let c = lsq3(&rows)?;
    let max_residual =
        rows.iter().map(|(f, y)| scale * (c[0] * f[0] + c[1] * f[1] + c[2] * f[2] - y).abs()).fold(0.0, f64::max);
    Some(TailFit {
        sigma_hat: c[0],
        a: c[1] * scale * scale,
        b: c[2] * scale.powi(4),
        max_residual,
        points: rows.len(),
    })
}

/// Three-column least squares by modified Gram-Schmidt.
fn lsq3(rows: &[([f64; 3], f64)]) -> Option<[f64; 3]> {
    let m = rows.len();
    let mut q: Vec<Vec<f64>> = (0..3).map(|j| rows.iter().map(|r| r.0[j]).collect()).collect();
    let mut rr = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..j {
            let d: f64 = (0..m).map(|i| q[k][i] * q[j][i]).sum();
            rr[k][j] = d;
            for i in 0..m {
                q[j][i] -= d * q[k][i];
            }
        }
        let nrm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nrm > 1e-14) {
            return None;
        }
        rr[j][j] = nrm;
        q[j].iter_mut().for_each(|v| *v /= nrm);
    }
    let mut qty = [0.0; 3];
    for j in 0..3 {
        qty[j] = (0..m).map(|i| q[j][i] * rows[i].1).sum();
    }
    let mut c = [0.0; 3];
    for j in (0..3).rev() {
        let acc: f64 = (j + 1..3).map(|k| rr[j][k] * c[k]).sum();
        c[j] = (qty[j] - acc) / rr[j][j];
    }
    Some(c)
}
