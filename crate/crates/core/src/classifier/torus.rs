use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::census::{census, Census};
use super::intersect::{self_intersection, Intersection};
use super::ClassifierConfig;
use crate::config::DomainConfig;
use crate::error::{Error, Result};
use crate::geoflow::{integrate_geodesic, EventKind, GeodesicState, ProfileCurve, Termination, Window};
use crate::numerics::brent;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotStatus {
    /// Reached `x = 0` again.
    Crossed,
    LeftWindow,
    ReachedMaxLength,
    Failed(String),
}

/// Shot from the horizontal point `(0, r0)` with `θ = 0` to the next
/// crossing of the r-axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedShot {
    pub r0: f64,
    /// `sin θ` at the crossing; `±2` when the shot never crosses.
    pub residual: f64,
    pub status: ShotStatus,
    pub crossing_r: Option<f64>,
    pub s_cross: Option<f64>,
}

impl ClosedShot {
    pub fn ok(&self) -> bool {
        self.status == ShotStatus::Crossed
    }
}

fn shot_window(ccfg: &ClassifierConfig) -> Window {
    let w = ccfg.shot_window;
    Window::new(-w, w, w).reflecting()
}

fn integrate_shot(r0: f64, cfg: &DomainConfig, ccfg: &ClassifierConfig) -> Result<ProfileCurve> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::InvalidInput(format!("r0 must be positive (got {r0})")));
    }
    integrate_geodesic(GeodesicState::new(0.0, 0.0, r0, 0.0), ccfg.shot_length, &shot_window(ccfg), cfg)
}

fn read_shot(r0: f64, curve: Result<ProfileCurve>) -> (ClosedShot, Option<ProfileCurve>) {
    let curve = match curve {
        Ok(c) => c,
        Err(e) => {
            let shot = ClosedShot {
                r0,
                residual: 2.0,
                status: ShotStatus::Failed(e.to_string()),
                crossing_r: None,
                s_cross: None,
            };
            return (shot, None);
        }
    };
    if let Some(e) = curve.events.iter().find(|e| e.kind == EventKind::RAxisCrossing && e.s > 1e-9) {
        let shot = ClosedShot {
            r0,
            residual: e.theta.sin(),
            status: ShotStatus::Crossed,
            crossing_r: Some(e.r),
            s_cross: Some(e.s),
        };
        return (shot, Some(curve));
    }
    let last = curve.last();
    let sentinel = if last.theta.sin() < 0.0 { -2.0 } else { 2.0 };
    let status = match curve.termination {
        Termination::LeftDomainWindow => ShotStatus::LeftWindow,
        Termination::ReachedMaxLength => ShotStatus::ReachedMaxLength,
        t => ShotStatus::Failed(format!("{t:?}")),
    };
    (ClosedShot { r0, residual: sentinel, status, crossing_r: None, s_cross: None }, Some(curve))
}

/// Closure residual of the shot from `(0, r0)`.
pub fn shoot_closed(r0: f64, cfg: &DomainConfig, ccfg: &ClassifierConfig) -> Result<ClosedShot> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::InvalidInput(format!("r0 must be positive (got {r0})")));
    }
    Ok(read_shot(r0, integrate_shot(r0, cfg, ccfg)).0)
}

/// Shots at every `r0`, run in parallel; output order follows the input.
pub fn scan_closed(r0s: &[f64], cfg: &DomainConfig, ccfg: &ClassifierConfig) -> Result<Vec<ClosedShot>> {
    r0s.par_iter().map(|&r0| shoot_closed(r0, cfg, ccfg)).collect()
}

/// Adjacent pairs of successful shots with residuals of opposite sign.
pub fn brackets(shots: &[ClosedShot]) -> Vec<(f64, f64)> {
    shots
        .windows(2)
        .filter(|w| w[0].ok() && w[1].ok() && w[0].residual * w[1].residual < 0.0)
        .map(|w| (w[0].r0, w[1].r0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusReport {
    pub bracket: (f64, f64),
    pub r0: f64,
    pub residual: f64,
    /// Radii where the closed curve meets `x = 0`.
    pub crossing_radii: Vec<f64>,
    pub min_r: f64,
    pub max_r: f64,
    pub max_abs_x: f64,
    pub length: f64,
    pub closure_gap: f64,
    pub census: Census,
    pub self_intersection: Option<Intersection>,
    pub notes: Vec<String>,
}

/// Refines a sign-change bracket of the closure residual and assembles the
/// closed curve by reflection in the r-axis.
pub fn find_torus(
    bracket: (f64, f64),
    cfg: &DomainConfig,
    ccfg: &ClassifierConfig,
) -> Result<(ProfileCurve, TorusReport)> {
    ccfg.validate()?;
    let (a, b) = bracket;
    if !(a > 0.0 && b > a) || !b.is_finite() {
        return Err(Error::InvalidBracket(format!("need 0 < a < b (got [{a}, {b}])")));
    }
    let fa = shoot_closed(a, cfg, ccfg)?;
    let fb = shoot_closed(b, cfg, ccfg)?;
    if !fa.ok() || !fb.ok() || fa.residual * fb.residual > 0.0 {
        return Err(Error::InvalidBracket(format!(
            "residuals {:e} ({:?}) and {:e} ({:?}) do not bracket a closed curve",
            fa.residual, fa.status, fb.residual, fb.status
        )));
    }
    let mut failure = None;
    let r0 = brent(
        |r| {
            let s = shoot_closed(r, cfg, ccfg).expect("r0 inside a positive bracket");
            if !s.ok() && failure.is_none() {
                failure = Some(format!("shot from r0 = {r} did not cross: {:?}", s.status));
            }
            s.residual
        },
        a,
        b,
        ccfg.closure_tol,
        1e-15,
        ccfg.max_iter,
    )?;
    if let Some(f) = failure {
        return Err(Error::NoConvergence(f));
    }
    let (shot, curve) = read_shot(r0, integrate_shot(r0, cfg, ccfg));
    let curve = curve.ok_or_else(|| Error::NoConvergence("refined shot failed".into()))?;
    if !shot.ok() || !(shot.residual.abs() < ccfg.closure_tol) {
        return Err(Error::NoConvergence(format!(
            "closure residual {:e} at r0 = {r0}: the residual jumps across the bracket",
            shot.residual
        )));
    }
    let half = curve.truncated(curve.s_start(), shot.s_cross.unwrap(), cfg)?;
    let closed = half.close_by_reflection(cfg)?;
    let cen = census(&closed, cfg);
    let hit = self_intersection(&closed);
    let mut crossing_radii: Vec<f64> =
        closed.events.iter().filter(|e| e.kind == EventKind::RAxisCrossing).map(|e| e.r).collect();
    crossing_radii.sort_by(f64::total_cmp);
    let min_r = closed.samples.iter().map(|p| p.state.r).fold(f64::INFINITY, f64::min);
    let max_r = closed.samples.iter().map(|p| p.state.r).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_x = closed.samples.iter().map(|p| p.state.x.abs()).fold(0.0, f64::max);
    let report = TorusReport {
        bracket,
        r0,
        residual: shot.residual,
        crossing_radii,
        min_r,
        max_r,
        max_abs_x,
        length: closed.length(),
        closure_gap: closed.closure_gap(),
        census: cen,
        self_intersection: hit,
        notes: vec!["crossing radii are computed values without an external reference".into()],
    };
    Ok((closed, report))
}
