use serde::{Deserialize, Serialize};

use super::curve::ProfileCurve;
use super::events::EventKind;
use super::rhs::tangent;

/// A maximal stretch of the curve that is a graph over one coordinate axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphArc {
    pub s_start: f64,
    pub s_end: f64,
    /// The arc ends at a point where it stops being a graph (a vertical
    /// point for graphs over x, a horizontal point for graphs over r).
    pub start_maximal: bool,
    pub end_maximal: bool,
    /// Sign of the derivative of the independent variable along the arc.
    pub orientation: f64,
    /// Independent variable, values and slopes of the graph.
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub crosses_x0: bool,
    pub horizontal_points: usize,
}

impl GraphArc {
    pub fn doubly_maximal(&self) -> bool {
        self.start_maximal && self.end_maximal
    }

    /// For arcs that are maximal on both sides: contains an `x = 0`
    /// crossing and at least one horizontal point.
    pub fn maximal_graph_check(&self) -> Option<bool> {
        self.doubly_maximal().then_some(self.crosses_x0 && self.horizontal_points >= 1)
    }

    /// Linear interpolation of the graph at `t` (None outside the arc).
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let n = self.t.len();
        if n < 2 {
            return None;
        }
        let inc = self.t[n - 1] > self.t[0];
        let (lo, hi) = if inc { (self.t[0], self.t[n - 1]) } else { (self.t[n - 1], self.t[0]) };
        if t < lo || t > hi {
            return None;
        }
        for k in 0..n - 1 {
            let (a, b) = (self.t[k], self.t[k + 1]);
            if (a <= t && t <= b) || (b <= t && t <= a) {
                let w = if b != a { (t - a) / (b - a) } else { 0.0 };
                return Some(self.u[k] + w * (self.u[k + 1] - self.u[k]));
            }
        }
        None
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Over {
    X,
    R,
}

/// Splits the curve into maximal graphs over the x-axis at vertical events.
pub fn graph_view(curve: &ProfileCurve) -> Vec<GraphArc> {
    split(curve, Over::X)
}

/// Splits the curve into maximal graphs over the r-axis at horizontal events.
pub fn rgraph_view(curve: &ProfileCurve) -> Vec<GraphArc> {
    split(curve, Over::R)
}

fn split(curve: &ProfileCurve, over: Over) -> Vec<GraphArc> {
    let cut_kind = if over == Over::X { EventKind::Vertical } else { EventKind::Horizontal };
    let cuts: Vec<f64> = curve.events.iter().filter(|e| e.kind == cut_kind).map(|e| e.s).collect();
    let s0 = curve.s_start();
    let s1 = curve.s_end();
    let first = &curve.samples[0].state;
    let last = curve.last();
    let axis_end = |r: f64, th: f64| r == 0.0 && tangent(th).0.abs() < 1e-9;
    let start_is_axis = over == Over::X && axis_end(first.r, first.theta);
    let end_is_axis = over == Over::X && axis_end(last.r, last.theta);

    let mut bounds = vec![(s0, start_is_axis)];
    for &c in &cuts {
        if c > s0 && c < s1 {
            bounds.push((c, true));
        } else if c == s0 {
            bounds[0].1 = true;
        }
    }
    let end_cut = cuts.contains(&s1);
    bounds.push((s1, end_is_axis || end_cut));

    let mut arcs: Vec<GraphArc> = bounds.windows(2).map(|w| build(curve, over, w[0], w[1])).collect();
    arcs.retain(|a| a.s_end > a.s_start);
    if curve.closed && arcs.len() >= 2 && !arcs[0].start_maximal {
        // Join the arc crossing the seam.
        let head = arcs.remove(0);
        let tail = arcs.last_mut().unwrap();
        let period = s1 - s0;
        tail.s_end = head.s_end + period;
        tail.end_maximal = head.end_maximal;
        tail.t.extend(head.t.iter().skip(1));
        tail.u.extend(head.u.iter().skip(1));
        tail.du.extend(head.du.iter().skip(1));
        tail.crosses_x0 |= head.crosses_x0;
        tail.horizontal_points += head.horizontal_points;
        let seam_events = curve.events.iter().filter(|e| e.s == s0);
        for e in seam_events {
            match e.kind {
                EventKind::RAxisCrossing => tail.crosses_x0 = true,
                EventKind::Horizontal => tail.horizontal_points += 1,
                _ => {}
            }
        }
    }
    arcs
}

fn build(curve: &ProfileCurve, over: Over, lo: (f64, bool), hi: (f64, bool)) -> GraphArc {
    let (a, b) = (lo.0, hi.0);
    let mut t = Vec::new();
    let mut u = Vec::new();
    let mut du = Vec::new();
    let mut orient = 0.0;
    for p in &curve.samples {
        let st = p.state;
        if st.s < a || st.s > b {
            continue;
        }
        let (c, s) = tangent(st.theta);
        let (dep, ind) = if over == Over::X { (s, c) } else { (c, s) };
        if ind.abs() < 1e-12 {
            continue;
        }
        if orient == 0.0 {
            orient = ind.signum();
        }
        if over == Over::X {
            t.push(st.x);
            u.push(st.r);
        } else {
            t.push(st.r);
            u.push(st.x);
        }
        du.push(dep / ind);
    }
    let inside = |s: f64| s > a && s < b;
    let crosses_x0 = curve.events.iter().any(|e| e.kind == EventKind::RAxisCrossing && inside(e.s));
    let horizontal_points = curve.events.iter().filter(|e| e.kind == EventKind::Horizontal && inside(e.s)).count();
    GraphArc {
        s_start: a,
        s_end: b,
        start_maximal: lo.1,
        end_maximal: hi.1,
        orientation: orient,
        t,
        u,
        du,
        crosses_x0,
        horizontal_points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DomainConfig;
    use crate::geoflow::{integrate_geodesic, GeodesicState, Window};

    #[test]
    fn sphere_splits_into_two_arcs() {
        let cfg = DomainConfig::for_dimension(2);
        let curve = integrate_geodesic(
            GeodesicState::new(0.0, -2.0, 0.0, std::f64::consts::FRAC_PI_2),
            std::f64::consts::TAU * 2.0 * 0.999,
            &Window::default().reflecting(),
            &cfg,
        )
        .unwrap();
        let arcs = graph_view(&curve);
        assert_eq!(arcs.len(), 2);
        let upper = &arcs[0];
        assert!(upper.doubly_maximal());
        assert_eq!(upper.maximal_graph_check(), Some(true));
        let top = upper.value_at(0.0).unwrap();
        assert!((top - 2.0).abs() < 1e-3);
    }

    #[test]
    fn cylinder_is_one_arc() {
        let cfg = DomainConfig::for_dimension(2);
        let curve =
            integrate_geodesic(GeodesicState::new(0.0, -1.0, 2f64.sqrt(), 0.0), 5.0, &Window::default(), &cfg).unwrap();
        let arcs = graph_view(&curve);
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].t.len(), curve.len());
    }
}
