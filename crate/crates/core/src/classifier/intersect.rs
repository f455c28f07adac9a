use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::geoflow::ProfileCurve;

/// Crossing of two polyline segments `i < j` at parameters `t1`, `t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolylineHit {
    pub i: usize,
    pub j: usize,
    pub t1: f64,
    pub t2: f64,
    pub point: [f64; 2],
}

/// A self-intersection of a profile curve at arclengths `s1 < s2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub s1: f64,
    pub s2: f64,
    pub point: [f64; 2],
    /// `|γ(s1) - γ(s2)|` after refinement.
    pub residual: f64,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn segment_hit(p: [f64; 2], p2: [f64; 2], q: [f64; 2], q2: [f64; 2]) -> Option<(f64, f64)> {
    let d1 = sub(p2, p);
    let d2 = sub(q2, q);
    let den = cross(d1, d2);
    let scale = (d1[0].hypot(d1[1]) * d2[0].hypot(d2[1])).max(f64::MIN_POSITIVE);
    if den.abs() <= 1e-14 * scale {
        return None;
    }
    let w = sub(q, p);
    let t1 = cross(w, d2) / den;
    let t2 = cross(w, d1) / den;
    ((0.0..=1.0).contains(&t1) && (0.0..=1.0).contains(&t2)).then_some((t1, t2))
}

/// All crossings between non-adjacent segments of a polyline, found with a
/// uniform spatial hash. For closed polylines the first and last segments
/// count as adjacent.
pub fn polyline_intersections(points: &[[f64; 2]], closed: bool) -> Vec<PolylineHit> {
    let n = points.len();
    if n < 4 {
        return Vec::new();
    }
    let segs = n - 1;
    let mut cell: f64 = 0.0;
    for k in 0..segs {
        let d = sub(points[k + 1], points[k]);
        cell = cell.max(d[0].abs()).max(d[1].abs());
    }
    let cell = if cell > 0.0 { 2.0 * cell } else { 1.0 };
    let key = |v: f64| (v / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for k in 0..segs {
        let (a, b) = (points[k], points[k + 1]);
        for cx in key(a[0].min(b[0]))..=key(a[0].max(b[0])) {
            for cy in key(a[1].min(b[1]))..=key(a[1].max(b[1])) {
                grid.entry((cx, cy)).or_default().push(k);
            }
        }
    }
    let mut seen = HashSet::new();
    let mut hits = Vec::new();
    let mut cells: Vec<_> = grid.into_iter().collect();
    cells.sort_by_key(|(k, _)| *k);
    for (_, members) in cells {
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let (i, j) = (members[a].min(members[b]), members[a].max(members[b]));
                if j <= i + 1 || (closed && i == 0 && j == segs - 1) || !seen.insert((i, j)) {
                    continue;
                }
                if let Some((t1, t2)) = segment_hit(points[i], points[i + 1], points[j], points[j + 1]) {
                    let d = sub(points[i + 1], points[i]);
                    let point = [points[i][0] + t1 * d[0], points[i][1] + t1 * d[1]];
                    hits.push(PolylineHit { i, j, t1, t2, point });
                }
            }
        }
    }
    hits.sort_by_key(|h| (h.i, h.j));
    hits
}

/// Piece length of the polyline used for the search.
const PIECE: f64 = 0.02;

/// All self-intersections of the curve, located on a fine polyline and
/// refined by Newton's method on the interpolant.
pub fn self_intersections(curve: &ProfileCurve) -> Vec<Intersection> {
    if curve.samples.len() < 2 {
        return Vec::new();
    }
    let mut pts = Vec::new();
    let mut ss = Vec::new();
    for i in 0..curve.samples.len() - 1 {
        let (a, b) = (curve.samples[i].state.s, curve.samples[i + 1].state.s);
        let m = ((b - a) / PIECE).ceil().max(1.0) as usize;
        for k in 0..m {
            let s = a + (b - a) * k as f64 / m as f64;
            let (x, r, _) = curve.state_in(i, s);
            pts.push([x, r]);
            ss.push(s);
        }
    }
    let last = curve.samples.last().unwrap().state;
    pts.push([last.x, last.r]);
    ss.push(last.s);
    let span = curve.length();
    let mut out: Vec<Intersection> = Vec::new();
    for h in polyline_intersections(&pts, curve.closed) {
        let mut s1 = ss[h.i] + h.t1 * (ss[h.i + 1] - ss[h.i]);
        let mut s2 = ss[h.j] + h.t2 * (ss[h.j + 1] - ss[h.j]);
        let (lo1, hi1) = (ss[h.i], ss[h.i + 1]);
        let (lo2, hi2) = (ss[h.j], ss[h.j + 1]);
        let mut resid = f64::INFINITY;
        let mut point = h.point;
        for _ in 0..30 {
            let (p1, t1) = curve.position_and_tangent(s1);
            let (p2, t2) = curve.position_and_tangent(s2);
            let f = sub(p1, p2);
            resid = f[0].hypot(f[1]);
            point = p1;
            if resid < 1e-14 {
                break;
            }
            // Solve [t1, -t2] (d1, d2) = -f.
            let det = -t1[0] * t2[1] + t2[0] * t1[1];
            if det.abs() < 1e-12 {
                break;
            }
            let d1 = (-f[0] * -t2[1] + t2[0] * -f[1]) / det;
            let d2 = (t1[0] * -f[1] - t1[1] * -f[0]) / det;
            let pad = 2.0 * PIECE;
            s1 = (s1 + d1).clamp(lo1 - pad, hi1 + pad);
            s2 = (s2 + d2).clamp(lo2 - pad, hi2 + pad);
        }
        let (s1, s2) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        if curve.closed && (s2 - s1 < 1e-9 || span - (s2 - s1) < 1e-9) {
            continue;
        }
        if (s2 - s1).abs() < 1e-9 {
            continue;
        }
        if out.iter().any(|o| (o.s1 - s1).abs() < 1e-7 && (o.s2 - s2).abs() < 1e-7) {
            continue;
        }
        out.push(Intersection { s1, s2, point, residual: resid });
    }
    out.sort_by(|a, b| a.s1.total_cmp(&b.s1).then(a.s2.total_cmp(&b.s2)));
    out
}

/// The first self-intersection along the curve, if any.
pub fn self_intersection(curve: &ProfileCurve) -> Option<Intersection> {
    self_intersections(curve).into_iter().next()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_eight_polyline() {
        let n = 400;
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
                [t.sin(), t.sin() * t.cos()]
            })
            .collect();
        let hits = polyline_intersections(&pts, true);
        assert_eq!(hits.len(), 1, "{hits:?}");
        assert!(hits[0].point[0].abs() < 1e-10 && hits[0].point[1].abs() < 1e-10);
    }

    #[test]
    fn convex_polygon_is_simple() {
        let n = 100;
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                [2.0 * t.cos(), t.sin()]
            })
            .collect();
        assert!(polyline_intersections(&pts, true).is_empty());
    }
}
