use serde::{Deserialize, Serialize};

use crate::config::DomainConfig;
use crate::geoflow::{graph_view, EventKind, ProfileCurve};

/// Position of a point relative to the r-axis and the cylinder line, read
/// with `r ↦ |r|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    /// `x > 0`, `|r| > sqrt(2α)`
    First,
    /// `x < 0`, `|r| > sqrt(2α)`
    Second,
    /// `x < 0`, `|r| < sqrt(2α)`
    Third,
    /// `x > 0`, `|r| < sqrt(2α)`
    Fourth,
    /// Within `event_eps` of one of the two lines.
    Boundary,
}

impl Quadrant {
    pub fn of(x: f64, r: f64, alpha: f64, eps: f64) -> Self {
        let h = r.abs() - (2.0 * alpha).sqrt();
        if x.abs() <= eps || h.abs() <= eps {
            return Quadrant::Boundary;
        }
        match (x > 0.0, h > 0.0) {
            (true, true) => Quadrant::First,
            (false, true) => Quadrant::Second,
            (false, false) => Quadrant::Third,
            (true, false) => Quadrant::Fourth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalPoint {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub quadrant: Quadrant,
    /// Local maximum of `x` along the curve.
    pub is_max: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizontalPoint {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    /// Local maximum of `|r|` along the curve.
    pub is_max: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantCounts {
    pub first: usize,
    pub second: usize,
    pub third: usize,
    pub fourth: usize,
    pub boundary: usize,
}

/// Event counts and the oscillation laws read off them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub vertical_points: Vec<VerticalPoint>,
    pub horizontal_points: Vec<HorizontalPoint>,
    pub raxis_crossings: usize,
    pub axis_hits: usize,
    pub quadrant_counts: QuadrantCounts,
    /// Vertical points alternate in the sign of `x` with positive maxima and
    /// negative minima; horizontal points alternate about the cylinder
    /// radius with maxima outside it.
    pub higgins_ok: bool,
    /// Every graph over the x-axis ending at vertical points on both sides
    /// crosses `x = 0` and contains a horizontal point.
    pub maximal_graphs_ok: bool,
    pub maximal_arcs: usize,
    /// Set for the cylinder and the r-axis; the census is skipped.
    pub degenerate: Option<crate::geoflow::DegenerateLine>,
    pub notes: Vec<String>,
}

/// Counts events and checks the oscillation laws.
pub fn census(curve: &ProfileCurve, cfg: &DomainConfig) -> Census {
    let alpha = curve.alpha;
    let eps = cfg.event_eps;
    let rc = (2.0 * alpha).sqrt();
    let count = |k: EventKind| curve.events.iter().filter(|e| e.kind == k).count();
    let mut out = Census {
        vertical_points: Vec::new(),
        horizontal_points: Vec::new(),
        raxis_crossings: count(EventKind::RAxisCrossing),
        axis_hits: count(EventKind::AxisHit),
        quadrant_counts: QuadrantCounts::default(),
        higgins_ok: true,
        maximal_graphs_ok: true,
        maximal_arcs: 0,
        degenerate: curve.degenerate_line(),
        notes: Vec::new(),
    };
    if out.degenerate.is_some() {
        out.notes.push("degenerate line: census skipped".into());
        return out;
    }

    for e in &curve.events {
        let kappa = curve.sample_at(e.s).scalars.kappa;
        // Work in r >= 0 via (r, θ, κ) -> (-r, -θ, -κ).
        let (r, th, k) = if e.r < 0.0 { (-e.r, -e.theta, -kappa) } else { (e.r, e.theta, kappa) };
        match e.kind {
            EventKind::Vertical => {
                let quadrant = Quadrant::of(e.x, r, alpha, eps);
                let q = &mut out.quadrant_counts;
                match quadrant {
                    Quadrant::First => q.first += 1,
                    Quadrant::Second => q.second += 1,
                    Quadrant::Third => q.third += 1,
                    Quadrant::Fourth => q.fourth += 1,
                    Quadrant::Boundary => q.boundary += 1,
                }
                let ddx = -th.sin() * k;
                out.vertical_points.push(VerticalPoint { s: e.s, x: e.x, r: e.r, quadrant, is_max: ddx < 0.0 });
            }
            EventKind::Horizontal => {
                let ddr = th.cos() * k;
                out.horizontal_points.push(HorizontalPoint { s: e.s, x: e.x, r: e.r, is_max: ddr < 0.0 });
            }
            _ => {}
        }
    }

    // Vertical points: x values alternate in sign, positive ones are maxima.
    let mut prev: Option<f64> = None;
    for v in &out.vertical_points {
        if v.x.abs() <= eps {
            prev = None;
            continue;
        }
        if (v.x > 0.0) != v.is_max {
            out.higgins_ok = false;
            out.notes.push(format!("vertical point at s = {:.6} is a {} with x = {:.6e}", v.s, ext(v.is_max), v.x));
        }
        if let Some(p) = prev {
            if (p > 0.0) == (v.x > 0.0) {
                out.higgins_ok = false;
                out.notes.push(format!("consecutive vertical points with x of equal sign at s = {:.6}", v.s));
            }
        }
        prev = Some(v.x);
    }

    // Horizontal points: |r| - sqrt(2α) alternates in sign, positive ones are
    // maxima. The chain restarts whenever the curve passes the axis.
    let axis_s: Vec<f64> = curve.events.iter().filter(|e| e.kind == EventKind::AxisHit).map(|e| e.s).collect();
    let mut prev: Option<(f64, f64)> = None;
    for h in &out.horizontal_points {
        let d = h.r.abs() - rc;
        if d.abs() <= eps {
            prev = None;
            continue;
        }
        if (d > 0.0) != h.is_max {
            out.higgins_ok = false;
            out.notes.push(format!("horizontal point at s = {:.6} is a {} with r = {:.6e}", h.s, ext(h.is_max), h.r));
        }
        if let Some((ps, pd)) = prev {
            let crossed = axis_s.iter().any(|&a| a > ps && a < h.s);
            if !crossed && (pd > 0.0) == (d > 0.0) {
                out.higgins_ok = false;
                out.notes.push(format!("consecutive horizontal points on one side of the cylinder at s = {:.6}", h.s));
            }
        }
        prev = Some((h.s, d));
    }

    for arc in graph_view(curve) {
        if let Some(ok) = arc.maximal_graph_check() {
            out.maximal_arcs += 1;
            if !ok {
                out.maximal_graphs_ok = false;
                out.notes.push(format!(
                    "maximal graph on s in [{:.6}, {:.6}] misses x = 0 or a horizontal point",
                    arc.s_start, arc.s_end
                ));
            }
        }
    }
    out
}

fn ext(is_max: bool) -> &'static str {
    if is_max {
        "maximum"
    } else {
        "minimum"
    }
}
