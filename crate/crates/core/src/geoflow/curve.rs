use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::axis::AxisSeries;
use super::events::{detect_events, Event};
use super::rhs::{curvature, curvature_rate, tangent, DerivedScalars, GeodesicState};
use crate::config::DomainConfig;
use crate::error::{Error, Result};
use crate::numerics::{gl5, quintic_hermite};
use crate::ode::{Dopri5, OdeSystem, StepControl};

/// Radius below which an approaching curve is matched against the axis
/// series; large dimensions amplify the singular mode near the axis.
const CAPTURE_REACH: f64 = 2.0;

/// What happens when a curve reaches the axis `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisPolicy {
    /// Stop at the axis endpoint.
    Terminate,
    /// Continue through the axis into `r < 0`, producing the planar curve
    /// that is symmetric under `r ↦ -r`.
    Reflect,
}

/// Rectangle the integration is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub r_max: f64,
    pub axis: AxisPolicy,
}

impl Default for Window {
    fn default() -> Self {
        Self { x_min: -100.0, x_max: 100.0, r_max: 100.0, axis: AxisPolicy::Terminate }
    }
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, r_max: f64) -> Self {
        Self { x_min, x_max, r_max, axis: AxisPolicy::Terminate }
    }

    pub fn reflecting(mut self) -> Self {
        self.axis = AxisPolicy::Reflect;
        self
    }

    /// Positive outside the window.
    fn exit_measure(&self, x: f64, r: f64) -> f64 {
        (self.x_min - x).max(x - self.x_max).max(r.abs() - self.r_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedMaxLength,
    HitAxis,
    LeftDomainWindow,
    StepUnderflow,
    /// Closed curve assembled from a shooting solution.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegenerateLine {
    Cylinder,
    RAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub state: GeodesicState,
    pub scalars: DerivedScalars,
    /// Arclength derivative of the curvature.
    pub dkappa: f64,
}

impl CurveSample {
    /// Sample of a geodesic away from the axis.
    pub fn on_geodesic(s: f64, x: f64, r: f64, theta: f64, alpha: f64) -> Self {
        let kappa = curvature(x, r, theta, alpha);
        Self {
            state: GeodesicState::new(s, x, r, theta),
            scalars: DerivedScalars::at(x, r, theta, kappa, alpha),
            dkappa: curvature_rate(x, r, theta, alpha),
        }
    }

    fn on_axis(s: f64, x_b: f64, theta: f64, kappa: f64, alpha: f64) -> Self {
        Self {
            state: GeodesicState::new(s, x_b, 0.0, theta),
            scalars: DerivedScalars::at(x_b, 0.0, theta, kappa, alpha),
            dkappa: 0.0,
        }
    }
}

/// Ordered samples of a profile curve with events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub alpha: f64,
    pub samples: Vec<CurveSample>,
    pub events: Vec<Event>,
    pub termination: Termination,
    /// Last sample coincides with the first one.
    pub closed: bool,
}

fn nearest_branch(theta: f64, reference: f64) -> f64 {
    theta + TAU * ((reference - theta) / TAU).round()
}

fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

impl ProfileCurve {
    /// Builds a curve from samples and detects its events.
    pub fn from_samples(
        samples: Vec<CurveSample>,
        termination: Termination,
        closed: bool,
        cfg: &DomainConfig,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("a curve needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].state.s > w[0].state.s)) {
            return Err(Error::InvalidInput("samples must be strictly increasing in s".into()));
        }
        let mut c = Self { alpha: cfg.alpha, samples, events: Vec::new(), termination, closed };
        c.events = detect_events(&c, cfg);
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn s_start(&self) -> f64 {
        self.samples[0].state.s
    }

    pub fn s_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].state.s
    }

    pub fn length(&self) -> f64 {
        self.s_end() - self.s_start()
    }

    pub fn first(&self) -> &GeodesicState {
        &self.samples[0].state
    }

    pub fn last(&self) -> &GeodesicState {
        &self.samples[self.samples.len() - 1].state
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|p| [p.state.x, p.state.r]).collect()
    }

    /// Index of the sample interval containing `s`.
    pub fn interval(&self, s: f64) -> usize {
        let n = self.samples.len();
        let k = self.samples.partition_point(|p| p.state.s <= s);
        k.clamp(1, n - 1) - 1
    }

    /// Interpolated `(x, r, θ)` on interval `i` at arclength `s`.
    pub fn state_in(&self, i: usize, s: f64) -> (f64, f64, f64) {
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        let h = b.state.s - a.state.s;
        let t = (s - a.state.s) / h;
        let (ca, sa) = tangent(a.state.theta);
        let (cb, sb) = tangent(b.state.theta);
        let (ka, kb) = (a.scalars.kappa, b.scalars.kappa);
        let (x, _) = quintic_hermite(h, a.state.x, ca, -sa * ka, b.state.x, cb, -sb * kb, t);
        let (r, _) = quintic_hermite(h, a.state.r, sa, ca * ka, b.state.r, sb, cb * kb, t);
        let (th, _) = quintic_hermite(h, a.state.theta, ka, a.dkappa, b.state.theta, kb, b.dkappa, t);
        (x, r, th)
    }

    /// Interpolated `(x, r, θ)` at arclength `s`.
    pub fn state_at(&self, s: f64) -> (f64, f64, f64) {
        self.state_in(self.interval(s), s)
    }

    /// Interpolated position and tangent direction at `s`.
    pub fn position_and_tangent(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let i = self.interval(s);
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        let h = b.state.s - a.state.s;
        let t = (s - a.state.s) / h;
        let (ca, sa) = tangent(a.state.theta);
        let (cb, sb) = tangent(b.state.theta);
        let (ka, kb) = (a.scalars.kappa, b.scalars.kappa);
        let (x, dx) = quintic_hermite(h, a.state.x, ca, -sa * ka, b.state.x, cb, -sb * kb, t);
        let (r, dr) = quintic_hermite(h, a.state.r, sa, ca * ka, b.state.r, sb, cb * kb, t);
        ([x, r], [dx, dr])
    }

    /// Full sample (state plus scalars) interpolated at `s`.
    pub fn sample_at(&self, s: f64) -> CurveSample {
        let (x, r, th) = self.state_at(s);
        if r != 0.0 {
            CurveSample::on_geodesic(s, x, r, th, self.alpha)
        } else {
            let i = self.interval(s);
            let k = self.samples[i].scalars.kappa;
            CurveSample::on_axis(s, x, th, k, self.alpha)
        }
    }

    /// Cylinder or r-axis detection (identically vanishing `sin θ` or `x`).
    pub fn degenerate_line(&self) -> Option<DegenerateLine> {
        let cyl = (2.0 * self.alpha).sqrt();
        if self.samples.iter().all(|p| tangent(p.state.theta).1.abs() < 1e-9 && (p.state.r - cyl).abs() < 1e-6) {
            return Some(DegenerateLine::Cylinder);
        }
        if self.samples.iter().all(|p| p.state.x.abs() < 1e-9 && tangent(p.state.theta).0.abs() < 1e-9) {
            return Some(DegenerateLine::RAxis);
        }
        None
    }

    /// Distance between the end and start points plus the tangent mismatch
    /// there (zero for a smoothly closed curve).
    pub fn closure_gap(&self) -> f64 {
        let a = self.first();
        let b = self.last();
        let pos = ((a.x - b.x).powi(2) + (a.r - b.r).powi(2)).sqrt();
        pos + wrap_pi(a.theta - b.theta).abs()
    }

    /// Mirror image under `x ↦ -x`, traversed in the opposite direction, so
    /// that it is again a geodesic.
    pub fn mirrored_reversed(&self, cfg: &DomainConfig) -> Result<Self> {
        let end = self.s_end();
        let start = self.s_start();
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|p| CurveSample {
                state: GeodesicState::new(start + end - p.state.s, -p.state.x, p.state.r, -p.state.theta),
                scalars: DerivedScalars::at(-p.state.x, p.state.r, -p.state.theta, p.scalars.kappa, self.alpha),
                dkappa: -p.dkappa,
            })
            .collect();
        Self::from_samples(samples, self.termination, false, cfg)
    }

    /// Closes a curve running from a point on `x = 0` to another point on
    /// `x = 0` by appending its reflection in the r-axis.
    pub fn close_by_reflection(&self, cfg: &DomainConfig) -> Result<Self> {
        let mirror = self.mirrored_reversed(cfg)?;
        let l = self.length();
        let theta_end = self.last().theta;
        let first_mirror = mirror.samples[0].state.theta;
        let shift = nearest_branch(first_mirror, theta_end) - first_mirror;
        let mut samples = self.samples.clone();
        for p in mirror.samples.iter().skip(1) {
            let mut q = *p;
            q.state.s += l;
            q.state.theta += shift;
            samples.push(q);
        }
        Self::from_samples(samples, Termination::Closed, true, cfg)
    }

    /// Restriction to `s ∈ [s_lo, s_hi]` with interpolated end samples.
    pub fn truncated(&self, s_lo: f64, s_hi: f64, cfg: &DomainConfig) -> Result<Self> {
        let mut out = Vec::new();
        let lo = s_lo.max(self.s_start());
        let hi = s_hi.min(self.s_end());
        out.push(self.sample_at(lo));
        for p in &self.samples {
            if p.state.s > lo + 1e-13 && p.state.s < hi - 1e-13 {
                out.push(*p);
            }
        }
        out.push(self.sample_at(hi));
        let term = if hi < self.s_end() { Termination::ReachedMaxLength } else { self.termination };
        Self::from_samples(out, term, false, cfg)
    }
}

struct GeoSys {
    alpha: f64,
    side: f64,
}

impl OdeSystem<3> for GeoSys {
    fn rhs(&self, _t: f64, y: &[f64; 3]) -> Option<[f64; 3]> {
        if !(y[1] * self.side > 0.0) {
            return None;
        }
        let (c, s) = tangent(y[2]);
        Some([c, s, curvature(y[0], y[1], y[2], self.alpha)])
    }
}

struct Tracer<'a> {
    cfg: &'a DomainConfig,
    window: &'a Window,
    max_length: f64,
    samples: Vec<CurveSample>,
}

enum Stop {
    Length,
    Window,
}

impl<'a> Tracer<'a> {
    fn push(&mut self, p: CurveSample) {
        if let Some(last) = self.samples.last() {
            if !(p.state.s > last.state.s + 1e-14) {
                self.samples.pop();
            }
        }
        self.samples.push(p);
    }

    fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    /// Walks the regular axis series between radii `rho_a` and `rho_b`
    /// (either order), starting at arclength `s0`. Returns the final
    /// arclength or a stop reason when the length budget runs out.
    #[allow(clippy::too_many_arguments)]
    fn walk_series(
        &mut self,
        series: &AxisSeries,
        side: f64,
        approaching: bool,
        rho_a: f64,
        rho_b: f64,
        s0: f64,
        theta0: f64,
    ) -> std::result::Result<(f64, f64), Stop> {
        let alpha = self.alpha();
        let m = ((rho_a - rho_b).abs() / (0.25 * self.cfg.max_step)).ceil().max(6.0) as usize;
        let dir_sign = if approaching { -1.0 } else { 1.0 };
        let angle = |rho: f64| {
            let (_, df) = series.eval(rho);
            (dir_sign * side).atan2(dir_sign * df)
        };
        let speed = |rho: f64| {
            let (_, df) = series.eval(rho);
            (1.0 + df * df).sqrt()
        };
        let mut s = s0;
        let mut theta = theta0;
        let mut prev = rho_a;
        for j in 1..=m {
            let rho = rho_a + (rho_b - rho_a) * j as f64 / m as f64;
            let ds = gl5(prev.min(rho), prev.max(rho), speed);
            let (mut rho_t, mut s_t) = (rho, s + ds);
            let over = s_t > self.max_length;
            if over {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let rr = prev + (rho - prev) * mid;
                    if s + gl5(prev.min(rr), prev.max(rr), speed) > self.max_length {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                rho_t = prev + (rho - prev) * lo;
                s_t = self.max_length;
            }
            theta = nearest_branch(angle(rho_t), theta);
            let (x, _) = series.eval(rho_t);
            let sample = if rho_t > 0.0 {
                CurveSample::on_geodesic(s_t, x, side * rho_t, theta, alpha)
            } else {
                let kappa = dir_sign * side * series.x_b / (2.0 * (alpha + 1.0));
                CurveSample::on_axis(s_t, series.x_b, theta, kappa, alpha)
            };
            if self.window.exit_measure(x, side * rho_t) > 0.0 {
                return Err(Stop::Window);
            }
            self.push(sample);
            if over {
                return Err(Stop::Length);
            }
            s = s_t;
            prev = rho;
        }
        Ok((s, theta))
    }

    /// Tries to match the regular axis series at the current point.
    fn capture(&mut self, x: f64, r: f64, theta: f64, forced: bool) -> Option<AxisSeries> {
        let side = r.signum();
        let rho = r.abs();
        let alpha = self.alpha();
        let mismatch_of = |series: &AxisSeries| {
            let (_, df) = series.eval(rho);
            wrap_pi(theta - (-side).atan2(-df)).abs()
        };
        if !forced {
            let probe = AxisSeries::new(AxisSeries::guess(x, rho, alpha), alpha);
            if probe.truncation(rho) > 1e-12 || mismatch_of(&probe) > 0.1 {
                return None;
            }
        }
        let series = AxisSeries::through(x, rho, alpha);
        let mismatch = mismatch_of(&series);
        let ok = mismatch < self.cfg.axis_capture_tol && series.truncation(rho) < 1e-15;
        if ok || forced {
            Some(series)
        } else {
            None
        }
    }
}

/// Integrates the geodesic system from `init` for at most `max_length`
/// units of arclength inside `window`.
pub fn integrate_geodesic(
    init: GeodesicState,
    max_length: f64,
    window: &Window,
    cfg: &DomainConfig,
) -> Result<ProfileCurve> {
    cfg.validate()?;
    if !(max_length > 0.0) || !max_length.is_finite() {
        return Err(Error::InvalidInput(format!("max_length must be positive (got {max_length})")));
    }
    if ![init.s, init.x, init.r, init.theta].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    if init.r < 0.0 && window.axis == AxisPolicy::Terminate {
        return Err(Error::InvalidInput(format!("initial radius must be >= 0 (got {})", init.r)));
    }
    if window.exit_measure(init.x, init.r) > 0.0 {
        return Err(Error::InvalidInput("initial point lies outside the window".into()));
    }
    let alpha = cfg.alpha;
    let s_limit = init.s + max_length;
    let mut tr = Tracer { cfg, window, max_length: s_limit, samples: Vec::new() };
    let mut s = init.s;
    let (mut x, mut r, mut theta) = (init.x, init.r, init.theta);
    let lead_radius = 0.5 * cfg.axis_capture_radius;

    // Axis start: enter along the regular series.
    let mut pending_axis: Option<(f64, f64)> = None;
    if r == 0.0 {
        let (c, sn) = tangent(theta);
        if c.abs() > 1e-9 {
            return Err(Error::InvalidInput("a curve starting on the axis must leave it orthogonally".into()));
        }
        if sn < 0.0 && window.axis == AxisPolicy::Terminate {
            return Err(Error::InvalidInput("axis start must point into r > 0".into()));
        }
        pending_axis = Some((x, sn.signum()));
        let kappa = sn.signum() * x / (2.0 * (alpha + 1.0));
        tr.push(CurveSample::on_axis(s, x, theta, kappa, alpha));
    } else {
        tr.push(CurveSample::on_geodesic(s, x, r, theta, alpha));
    }

    let termination = 'outer: loop {
        if let Some((x_b, side)) = pending_axis.take() {
            let series = AxisSeries::new(x_b, alpha);
            match tr.walk_series(&series, side, false, 0.0, lead_radius, s, theta) {
                Ok((s1, th1)) => {
                    s = s1;
                    theta = th1;
                    let last = tr.samples.last().unwrap().state;
                    x = last.x;
                    r = last.r;
                }
                Err(Stop::Length) => break 'outer Termination::ReachedMaxLength,
                Err(Stop::Window) => break 'outer Termination::LeftDomainWindow,
            }
        }
        if s >= s_limit {
            break Termination::ReachedMaxLength;
        }
        let side = r.signum();
        let sys = GeoSys { alpha, side };
        let ctl = StepControl::new(cfg.rel_tol, cfg.abs_tol).with_h_max(cfg.max_step).with_h_min(cfg.min_step);
        let mut st = Dopri5::new(&sys, s, [x, r, theta], s_limit, ctl)?;
        loop {
            let seg = match st.step() {
                Ok(Some(seg)) => seg,
                Ok(None) => break 'outer Termination::ReachedMaxLength,
                Err(Error::StepUnderflow { .. }) | Err(Error::StepBudget { .. }) => {
                    break 'outer Termination::StepUnderflow
                }
                Err(e) => return Err(e),
            };
            let [x1, r1, t1] = seg.y1;
            if window.exit_measure(x1, r1) > 0.0 {
                let (mut lo, mut hi) = (seg.t0, seg.t1);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let y = seg.eval(mid);
                    if window.exit_measure(y[0], y[1]) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let y = seg.eval(hi);
                tr.push(CurveSample::on_geodesic(hi, y[0], y[1], y[2], alpha));
                break 'outer Termination::LeftDomainWindow;
            }
            tr.push(CurveSample::on_geodesic(seg.t1, x1, r1, t1, alpha));
            let rho = r1.abs();
            let (c1, s1) = tangent(t1);
            let approaching = s1 * side < 0.0;
            if approaching && rho < cfg.axis_capture_radius.max(CAPTURE_REACH) {
                let forced = rho < cfg.r_axis_eps && c1.abs() < 1e-4;
                if let Some(series) = tr.capture(x1, r1, t1, forced) {
                    let x_b = series.x_b;
                    match tr.walk_series(&series, side, true, rho, 0.0, seg.t1, t1) {
                        Ok((s_axis, th_axis)) => {
                            if window.axis == AxisPolicy::Terminate {
                                break 'outer Termination::HitAxis;
                            }
                            s = s_axis;
                            theta = th_axis;
                            x = x_b;
                            pending_axis = Some((x_b, -side));
                            continue 'outer;
                        }
                        Err(Stop::Length) => break 'outer Termination::ReachedMaxLength,
                        Err(Stop::Window) => break 'outer Termination::LeftDomainWindow,
                    }
                }
            }
        }
    };
    ProfileCurve::from_samples(tr.samples, termination, false, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u32) -> DomainConfig {
        DomainConfig::for_dimension(n)
    }

    #[test]
    fn cylinder_stays_put() {
        for n in [2u32, 3, 7] {
            let c = cfg(n);
            let rc = c.cylinder_radius();
            let curve =
                integrate_geodesic(GeodesicState::new(0.0, -5.0, rc, 0.0), 10.0, &Window::default(), &c).unwrap();
            let drift = curve.samples.iter().map(|p| (p.state.r - rc).abs()).fold(0.0, f64::max);
            assert!(drift < 1e-9, "drift {drift:e}");
            assert_eq!(curve.termination, Termination::ReachedMaxLength);
            assert!((curve.s_end() - 10.0).abs() < 1e-12);
            assert_eq!(curve.degenerate_line(), Some(DegenerateLine::Cylinder));
        }
    }

    #[test]
    fn r_axis_is_exact() {
        let c = cfg(2);
        let curve = integrate_geodesic(
            GeodesicState::new(0.0, 0.0, 1.0, std::f64::consts::FRAC_PI_2),
            3.0,
            &Window::default(),
            &c,
        )
        .unwrap();
        assert!(curve.samples.iter().all(|p| p.state.x == 0.0));
        assert_eq!(curve.degenerate_line(), Some(DegenerateLine::RAxis));
    }

    #[test]
    fn sphere_hits_axis_orthogonally() {
        let c = cfg(2);
        let l = TAU * 2.0 * 0.49;
        let curve = integrate_geodesic(GeodesicState::new(0.0, 0.0, 2.0, 0.0), l, &Window::default(), &c).unwrap();
        assert_eq!(curve.termination, Termination::HitAxis);
        for p in &curve.samples {
            assert!((p.state.x.powi(2) + p.state.r.powi(2) - 4.0).abs() < 1e-8);
        }
        let last = curve.last();
        assert_eq!(last.r, 0.0);
        assert!(tangent(last.theta).0.abs() < 1e-6);
        assert!((last.x - 2.0).abs() < 1e-9);
        let k = curve.samples.last().unwrap().scalars.kappa;
        assert!((k + 0.5).abs() < 1e-9);
    }

    #[test]
    fn axis_start_follows_sphere() {
        for n in [2u32, 3, 7] {
            let c = cfg(n);
            let radius = c.sphere_radius();
            let curve = integrate_geodesic(
                GeodesicState::new(0.0, -radius, 0.0, std::f64::consts::FRAC_PI_2),
                10.0,
                &Window::default().reflecting(),
                &c,
            )
            .unwrap();
            let drift = curve
                .samples
                .iter()
                .map(|p| (p.state.x.powi(2) + p.state.r.powi(2) - radius * radius).abs())
                .fold(0.0, f64::max);
            assert!(drift < 1e-8, "n={n} drift {drift:e}");
            assert!((curve.s_end() - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_crosses_axis() {
        for n in [2u32, 3, 7] {
            let c = cfg(n);
            let radius = c.sphere_radius();
            let curve = integrate_geodesic(
                GeodesicState::new(0.0, 0.0, radius, 0.0),
                10.0,
                &Window::default().reflecting(),
                &c,
            )
            .unwrap();
            let drift = curve
                .samples
                .iter()
                .map(|p| (p.state.x.powi(2) + p.state.r.powi(2) - radius * radius).abs())
                .fold(0.0, f64::max);
            assert!(drift < 1e-8, "n={n} drift {drift:e}");
            assert!(curve.samples.iter().any(|p| p.state.r < -1.0), "n={n} did not cross");
        }
    }

    #[test]
    fn spacing_bounded_by_max_step() {
        let c = cfg(2);
        let curve = integrate_geodesic(GeodesicState::new(0.0, 0.3, 1.0, 0.4), 12.0, &Window::default(), &c).unwrap();
        for w in curve.samples.windows(2) {
            let d = ((w[1].state.x - w[0].state.x).powi(2) + (w[1].state.r - w[0].state.r).powi(2)).sqrt();
            assert!(d <= c.max_step * (1.0 + 1e-9));
        }
    }

    #[test]
    fn window_exit_is_located() {
        let c = cfg(2);
        let curve = integrate_geodesic(
            GeodesicState::new(0.0, 3.0, 3.0, std::f64::consts::FRAC_PI_4),
            100.0,
            &Window::new(-5.0, 5.0, 5.0),
            &c,
        )
        .unwrap();
        assert_eq!(curve.termination, Termination::LeftDomainWindow);
        let l = curve.last();
        let m = (l.x.abs() - 5.0).max(l.r - 5.0);
        assert!(m.abs() < 1e-9);
    }

    #[test]
    fn interpolation_agrees_with_fresh_integration() {
        let c = cfg(2);
        let curve = integrate_geodesic(GeodesicState::new(0.0, 0.2, 1.2, 0.9), 6.0, &Window::default(), &c).unwrap();
        let i = curve.len() / 2;
        let a = curve.samples[i].state;
        let b = curve.samples[i + 1].state;
        let mid = 0.5 * (a.s + b.s);
        let fresh =
            integrate_geodesic(GeodesicState::new(a.s, a.x, a.r, a.theta), mid - a.s, &Window::default(), &c).unwrap();
        let (x, r, th) = curve.state_at(mid);
        let f = fresh.last();
        assert!((x - f.x).abs() < 1e-10 && (r - f.r).abs() < 1e-10 && (th - f.theta).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let c = cfg(2);
        assert!(integrate_geodesic(GeodesicState::new(0.0, 0.0, -1.0, 0.0), 1.0, &Window::default(), &c).is_err());
        assert!(integrate_geodesic(GeodesicState::new(0.0, 0.0, 0.0, 0.3), 1.0, &Window::default(), &c).is_err());
        assert!(integrate_geodesic(GeodesicState::new(0.0, 0.0, 1.0, 0.0), -1.0, &Window::default(), &c).is_err());
    }
}
