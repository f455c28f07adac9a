//! Small numerical building blocks: Gauss–Legendre rules, adaptive Simpson,
//! quintic Hermite interpolation on grids, and a bracketing root finder.

use crate::error::{Error, Result};

/// Five-point Gauss–Legendre nodes on [-1, 1].
pub const GL5_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
pub const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Integrates `f` over `[a, b]` with the five-point Gauss–Legendre rule.
#[inline]
pub fn gl5<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..5 {
        acc += GL5_WEIGHTS[k] * f(c + h * GL5_NODES[k]);
    }
    acc * h
}

/// Gauss–Legendre nodes and weights on [-1, 1] for an arbitrary order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut failed = false;
    let v = simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, max_depth, &mut failed);
    if failed || !v.is_finite() {
        return Err(Error::Quadrature(format!("adaptive Simpson did not reach tolerance {tol:e} on [{a}, {b}]")));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    failed: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *failed = true;
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed)
}

/// Quintic Hermite interpolant on one interval of width `h` at local
/// coordinate `t ∈ [0, 1]`. Returns value and derivative (w.r.t. the global
/// variable).
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn quintic_hermite(h: f64, p0: f64, d0: f64, a0: f64, p1: f64, d1: f64, a1: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let dh2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let dh3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let dh4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let dh5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let hh = h * h;
    let v = h0 * p0 + h1 * h * d0 + h2 * hh * a0 + h3 * hh * a1 + h4 * h * d1 + h5 * p1;
    let dv = (dh0 * p0 + dh1 * h * d0 + dh2 * hh * a0 + dh3 * hh * a1 + dh4 * h * d1 + dh5 * p1) / h;
    (v, dv)
}

/// A C² piecewise-quintic function stored by values and first two
/// derivatives at strictly increasing nodes.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuinticGrid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub ddy: Vec<f64>,
}

impl QuinticGrid {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>, ddy: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || dy.len() != n || ddy.len() != n {
            return Err(Error::InvalidInput("grid needs >= 2 nodes with matching columns".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid nodes must be strictly increasing".into()));
        }
        Ok(Self { x, y, dy, ddy })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Index `i` of the interval `[x_i, x_{i+1}]` containing `x` (clamped).
    pub fn locate(&self, x: f64) -> usize {
        let n = self.x.len();
        if x <= self.x[0] {
            return 0;
        }
        if x >= self.x[n - 1] {
            return n - 2;
        }
        self.x.partition_point(|&v| v <= x) - 1
    }

    /// Value and first derivative on interval `i`.
    #[inline]
    pub fn eval_in(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        quintic_hermite(h, self.y[i], self.dy[i], self.ddy[i], self.y[i + 1], self.dy[i + 1], self.ddy[i + 1], t)
    }

    /// Value and first derivative at `x` (inside the grid range).
    pub fn eval(&self, x: f64) -> (f64, f64) {
        self.eval_in(self.locate(x), x)
    }

    /// Restriction to nodes inside `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.x[i] >= lo && self.x[i] <= hi).collect();
        Self::new(
            idx.iter().map(|&i| self.x[i]).collect(),
            idx.iter().map(|&i| self.y[i]).collect(),
            idx.iter().map(|&i| self.dy[i]).collect(),
            idx.iter().map(|&i| self.ddy[i]).collect(),
        )
    }
}

/// Largest interval-averaged defect of `g(y')' = f(x, y, y')` on a grid:
/// `|g(y'(b)) - g(y'(a)) - ∫_a^b f| / (b - a)` over all intervals.
pub fn integral_defect<G, F>(grid: &QuinticGrid, g: G, mut f: F) -> f64
where
    G: Fn(f64) -> f64,
    F: FnMut(f64, f64, f64) -> f64,
{
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid.x[i], grid.x[i + 1]);
        let int = gl5(a, b, |x| {
            let (y, dy) = grid.eval_in(i, x);
            f(x, y, dy)
        });
        let d = (g(grid.dy[i + 1]) - g(grid.dy[i]) - int).abs() / (b - a);
        worst = worst.max(d);
    }
    worst
}

/// Brent's method on a sign-changing bracket.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, ftol: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::InvalidBracket(format!("f({a}) = {fa:e} and f({b}) = {fb:e} do not bracket a root")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::NoConvergence(format!("Brent iteration did not converge near {b}")))
}

/// Ordinary least squares fit `y ≈ c0·f0(x) + c1·f1(x)`.
pub fn lsq2(rows: &[(f64, f64, f64)]) -> Option<(f64, f64, f64)> {
    // rows: (f0, f1, y)
    let (mut s00, mut s01, mut s11, mut s0y, mut s1y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, y) in rows {
        s00 += a * a;
        s01 += a * b;
        s11 += b * b;
        s0y += a * y;
        s1y += b * y;
    }
    let det = s00 * s11 - s01 * s01;
    if det.abs() < 1e-300 {
        return None;
    }
    let c0 = (s0y * s11 - s1y * s01) / det;
    let c1 = (s00 * s1y - s01 * s0y) / det;
    let res = rows.iter().map(|&(a, b, y)| (y - c0 * a - c1 * b).abs()).fold(0.0, f64::max);
    Some((c0, c1, res))
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_matches_five_point_table() {
        let (x, w) = gauss_legendre(5);
        for k in 0..5 {
            assert!((x[k] - GL5_NODES[k]).abs() < 1e-15);
            assert!((w[k] - GL5_WEIGHTS[k]).abs() < 1e-15);
        }
        let (x, w) = gauss_legendre(20);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((v - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn gl5_exact_for_degree_nine() {
        let v = gl5(0.3, 1.7, |x| x.powi(9) - 2.0 * x.powi(4));
        let exact = (1.7f64.powi(10) - 0.3f64.powi(10)) / 10.0 - 2.0 * (1.7f64.powi(5) - 0.3f64.powi(5)) / 5.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_exponential() {
        let v = adaptive_simpson(|w| (-w).exp(), 0.0, 30.0, 1e-14, 40).unwrap();
        assert!((v - (1.0 - (-30f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn quintic_reproduces_quintic_polynomials() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) + 0.25 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x + 1.25 * x.powi(4);
        let ddp = |x: f64| 3.0 * x + 5.0 * x.powi(3);
        let (a, b) = (0.4, 1.3);
        for k in 0..=10 {
            let x = a + (b - a) * k as f64 / 10.0;
            let (v, dv) = quintic_hermite(b - a, p(a), dp(a), ddp(a), p(b), dp(b), ddp(b), (x - a) / (b - a));
            assert!((v - p(x)).abs() < 1e-13);
            assert!((dv - dp(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 1e-15, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 1e-12, 50).is_err());
    }

    #[test]
    fn lsq2_recovers_coefficients() {
        let rows: Vec<_> = (1..20)
            .map(|k| {
                let x = k as f64;
                (x, 1.0 / x, 0.7 * x + 3.0 / x)
            })
            .collect();
        let (c0, c1, res) = lsq2(&rows).unwrap();
        assert!((c0 - 0.7).abs() < 1e-12 && (c1 - 3.0).abs() < 1e-10 && res < 1e-10);
    }
}
