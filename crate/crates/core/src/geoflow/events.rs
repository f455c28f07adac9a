use serde::{Deserialize, Serialize};

use super::curve::{DegenerateLine, ProfileCurve};
use super::rhs::tangent;
use crate::config::DomainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// `cos θ = 0`
    Vertical,
    /// `sin θ = 0`
    Horizontal,
    /// `x = 0`
    RAxisCrossing,
    /// `r = sqrt(2α)`
    CylinderCrossing,
    /// `r = 0`
    AxisHit,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Vertical => "vertical",
            EventKind::Horizontal => "horizontal",
            EventKind::RAxisCrossing => "raxis_crossing",
            EventKind::CylinderCrossing => "cylinder_crossing",
            EventKind::AxisHit => "axis_hit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
}

/// Values this small count as exact zeros when reading off signs.
const ZERO_BAND: f64 = 1e-13;

fn event_value(kind: EventKind, x: f64, r: f64, theta: f64, cyl: f64) -> f64 {
    match kind {
        EventKind::Vertical => tangent(theta).0,
        EventKind::Horizontal => tangent(theta).1,
        EventKind::RAxisCrossing => x,
        EventKind::CylinderCrossing => r - cyl,
        EventKind::AxisHit => r,
    }
}

fn sign(v: f64) -> i8 {
    if v > ZERO_BAND {
        1
    } else if v < -ZERO_BAND {
        -1
    } else {
        0
    }
}

/// Locates all sign changes of `cos θ`, `sin θ`, `x`, `r - sqrt(2α)` and
/// `r` along the curve, refined on the interpolant to `event_eps`.
pub fn detect_events(curve: &ProfileCurve, cfg: &DomainConfig) -> Vec<Event> {
    let cyl = (2.0 * curve.alpha).sqrt();
    let degenerate = curve.degenerate_line();
    let mut kinds = vec![EventKind::AxisHit];
    match degenerate {
        Some(DegenerateLine::Cylinder) => kinds.extend([EventKind::Vertical, EventKind::RAxisCrossing]),
        Some(DegenerateLine::RAxis) => kinds.extend([EventKind::Horizontal, EventKind::CylinderCrossing]),
        None => kinds.extend([
            EventKind::Vertical,
            EventKind::Horizontal,
            EventKind::RAxisCrossing,
            EventKind::CylinderCrossing,
        ]),
    }
    let n = curve.samples.len();
    let mut events = Vec::new();
    for kind in kinds {
        let vals: Vec<f64> =
            curve.samples.iter().map(|p| event_value(kind, p.state.x, p.state.r, p.state.theta, cyl)).collect();
        let signs: Vec<i8> = vals.iter().map(|&v| sign(v)).collect();
        let mut last_nz: Option<usize> = None;
        for j in 0..n {
            if signs[j] == 0 {
                continue;
            }
            if let Some(i) = last_nz {
                if signs[i] != signs[j] {
                    events.push(locate(curve, kind, i, j, &vals, cyl, cfg));
                }
            }
            last_nz = Some(j);
        }
        if curve.closed {
            // The seam: compare the last and first nonzero signs.
            let first = (0..n).find(|&j| signs[j] != 0);
            if let (Some(f), Some(l)) = (first, last_nz) {
                let seam_zero = signs[0] == 0 && signs[n - 1] == 0;
                if signs[f] != signs[l] && seam_zero {
                    let p = &curve.samples[0].state;
                    events.push(Event { kind, s: p.s, x: p.x, r: p.r, theta: p.theta });
                }
            }
        }
    }
    events.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.kind.cmp(&b.kind)));
    events
}

fn locate(
    curve: &ProfileCurve,
    kind: EventKind,
    i: usize,
    j: usize,
    vals: &[f64],
    cyl: f64,
    cfg: &DomainConfig,
) -> Event {
    if j > i + 1 {
        // Exact zero(s) at intermediate samples: take the first one.
        let p = &curve.samples[i + 1].state;
        return Event { kind, s: p.s, x: p.x, r: p.r, theta: p.theta };
    }
    let (mut lo, mut hi) = (curve.samples[i].state.s, curve.samples[j].state.s);
    let mut flo = vals[i];
    let mut best = (lo, flo.abs());
    if vals[j].abs() < best.1 {
        best = (hi, vals[j].abs());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (x, r, th) = curve.state_in(i, mid);
        let fm = event_value(kind, x, r, th, cyl);
        if fm.abs() < best.1 {
            best = (mid, fm.abs());
        }
        if fm.abs() <= 0.01 * cfg.event_eps || hi - lo < 1e-15 * mid.abs().max(1.0) {
            break;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let s = best.0;
    let (x, r, th) = curve.state_in(i, s);
    Event { kind, s, x, r, theta: th }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoflow::{integrate_geodesic, GeodesicState, Window};

    #[test]
    fn full_circle_census() {
        let cfg = DomainConfig::for_dimension(2);
        let radius = 2.0;
        let l = std::f64::consts::TAU * radius;
        let r0 = (radius * radius - 0.09f64).sqrt();
        let curve = integrate_geodesic(
            GeodesicState::new(0.0, 0.3, r0, (-0.3f64).atan2(r0)),
            l,
            &Window::default().reflecting(),
            &cfg,
        )
        .unwrap();
        let count = |k| curve.events.iter().filter(|e| e.kind == k).count();
        assert_eq!(count(EventKind::Vertical), 2);
        assert_eq!(count(EventKind::Horizontal), 2);
        assert_eq!(count(EventKind::RAxisCrossing), 2);
        for e in &curve.events {
            let v = event_value(e.kind, e.x, e.r, e.theta, 2f64.sqrt());
            assert!(v.abs() <= cfg.event_eps || e.kind == EventKind::AxisHit, "{e:?}");
        }
    }

    #[test]
    fn cylinder_has_no_turning_events() {
        let cfg = DomainConfig::for_dimension(2);
        let curve = integrate_geodesic(GeodesicState::new(0.0, -3.0, 2f64.sqrt(), 0.0), 10.0, &Window::default(), &cfg)
            .unwrap();
        assert!(curve.events.iter().all(|e| e.kind == EventKind::RAxisCrossing));
        assert_eq!(curve.events.len(), 1);
    }
}
