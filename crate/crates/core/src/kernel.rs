//! Exponentially weighted double integrals
//!
//! ```text
//! K(t) = ∫_t^∞ Q'(s) φ(s) e^{-(Q(s) - Q(t))} ds = ∫_0^∞ e^{-w} φ(s(w)) dw,
//! J(x) = ∫_x^∞ t^{-2} K(t) dt,
//! ```
//!
//! with `Q'(s) = (s/2)(1 + y'(s)²)` (or `s/2`) for a profile `y` given on a
//! quintic grid plus an asymptotic tail. These are the building blocks of
//! the fixed-point operators for conical ends and of the linearized identity.

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, gauss_legendre, gl5, QuinticGrid};

/// The function `φ` in terms of the profile `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// `φ = 1/y`
    Reciprocal,
    /// `φ = 2y'/s`
    SlopeOverS,
    /// `φ = 1` (normalization check)
    One,
}

impl Weight {
    #[inline]
    fn eval(self, s: f64, y: f64, dy: f64) -> f64 {
        match self {
            Weight::Reciprocal => 1.0 / y,
            Weight::SlopeOverS => 2.0 * dy / s,
            Weight::One => 1.0,
        }
    }
}

/// `y(s) = slope·s + a/s + b/s³` beyond the end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AsymptoticTail {
    pub slope: f64,
    pub a: f64,
    pub b: f64,
}

impl AsymptoticTail {
    /// Matches value and derivative at `x`.
    pub fn fit(slope: f64, x: f64, y: f64, dy: f64) -> Self {
        // v = a/x + b/x³, v' = -a/x² - 3b/x⁴
        let v = y - slope * x;
        let dv = dy - slope;
        let b = -(v + x * dv) * x.powi(3) / 2.0;
        let a = v * x - b / (x * x);
        Self { slope, a, b }
    }

    pub fn eval(&self, s: f64) -> (f64, f64) {
        let s2 = s * s;
        (self.slope * s + self.a / s + self.b / (s2 * s), self.slope - self.a / s2 - 3.0 * self.b / (s2 * s2))
    }

    pub fn second(&self, s: f64) -> f64 {
        2.0 * self.a / s.powi(3) + 12.0 * self.b / s.powi(5)
    }

    /// `Q(s) - Q(t)` in closed form.
    fn dq(&self, t: f64, s: f64, slope_in_q: bool) -> f64 {
        if !slope_in_q {
            return 0.25 * (s - t) * (s + t);
        }
        let (c0, a, b) = (self.slope, self.a, self.b);
        let d2 = (s - t) * (s + t) / (t * t * s * s);
        let d4 = d2 * (1.0 / (t * t) + 1.0 / (s * s));
        let d6 = d2 * (1.0 / t.powi(4) + 1.0 / (t * t * s * s) + 1.0 / s.powi(4));
        0.25 * (1.0 + c0 * c0) * (s - t) * (s + t) - c0 * a * ((s - t) / t).ln_1p()
            + 0.5 * (0.5 * a * a - 3.0 * c0 * b) * d2
            + 0.75 * a * b * d4
            + 0.75 * b * b * d6
    }
}

/// The integrand data: profile on a grid, its tail, and the weight.
#[derive(Debug, Clone, Copy)]
pub struct KernelProblem<'a> {
    pub grid: &'a QuinticGrid,
    /// Profile beyond the grid; `None` means the integrals stop at the last
    /// node (finite upper limit).
    pub tail: Option<AsymptoticTail>,
    /// `Q' = (s/2)(1 + y'²)` when true, `s/2` otherwise.
    pub slope_in_q: bool,
    pub weight: Weight,
    /// `e^{-w}` below this is dropped.
    pub tail_eps: f64,
}

impl KernelProblem<'_> {
    #[inline]
    fn q_prime(&self, s: f64, dy: f64) -> f64 {
        if self.slope_in_q {
            0.5 * s * (1.0 + dy * dy)
        } else {
            0.5 * s
        }
    }

    /// `K` at a point of the tail, by adaptive Simpson in `w`.
    fn tail_kernel(&self, tail: &AsymptoticTail, t: f64) -> Result<f64> {
        let w_max = -self.tail_eps.ln();
        let c = if self.slope_in_q { 1.0 + tail.slope * tail.slope } else { 1.0 };
        let s_of_w = |w: f64| -> f64 {
            let mut s = (t * t + 4.0 * w / c).sqrt();
            if !self.slope_in_q {
                return s;
            }
            for _ in 0..50 {
                let (_, dy) = tail.eval(s);
                let f = tail.dq(t, s, true) - w;
                let step = f / self.q_prime(s, dy);
                s -= step;
                if step.abs() <= 1e-15 * s {
                    break;
                }
            }
            s
        };
        let f = |w: f64| {
            let s = s_of_w(w);
            let (y, dy) = tail.eval(s);
            (-w).exp() * self.weight.eval(s, y, dy)
        };
        let (y, dy) = tail.eval(t);
        let scale = self.weight.eval(t, y, dy).abs().max(1e-300);
        // Most of the mass sits near w = 0; split so the recursion starts small.
        let mut total = 0.0;
        let cuts = [0.0, 1.0, 4.0, 12.0, w_max];
        for k in 0..cuts.len() - 1 {
            total += adaptive_simpson(f, cuts[k], cuts[k + 1], 1e-16 * scale, 40)?;
        }
        Ok(total)
    }
}

/// `K`, `K'`, `J` and the integrand data on a refinement of the grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    /// Piece boundaries; every grid node is one of them.
    pub s: Vec<f64>,
    /// Position of each grid node in `s`.
    pub node_index: Vec<usize>,
    /// `Q(s) - Q(s_0)`.
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub phi: Vec<f64>,
    pub k: Vec<f64>,
    pub dk: Vec<f64>,
    pub j: Vec<f64>,
}

/// Values at the grid nodes only.
#[derive(Debug, Clone)]
pub struct NodeKernel {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub phi: Vec<f64>,
    pub k: Vec<f64>,
    pub dk: Vec<f64>,
    pub j: Vec<f64>,
}

impl KernelTable {
    pub fn at_nodes(&self) -> NodeKernel {
        let pick = |v: &[f64]| self.node_index.iter().map(|&i| v[i]).collect::<Vec<_>>();
        NodeKernel {
            x: pick(&self.s),
            q: pick(&self.q),
            q_prime: pick(&self.q_prime),
            phi: pick(&self.phi),
            k: pick(&self.k),
            dk: pick(&self.dk),
            j: pick(&self.j),
        }
    }
}

const PIECE_DQ: f64 = 0.25;
const PIECE_H: f64 = 0.05;

/// Builds the table of `K`, `K'` and `J` at all grid nodes.
pub fn kernel_table(p: &KernelProblem) -> Result<KernelTable> {
    let g = p.grid;
    if g.len() < 2 {
        return Err(Error::GridTooShort("kernel grid needs at least two nodes".into()));
    }
    if !(p.tail_eps > 0.0 && p.tail_eps < 1.0) {
        return Err(Error::InvalidInput(format!("tail_eps must lie in (0, 1) (got {})", p.tail_eps)));
    }
    if g.x_min() <= 0.0 {
        return Err(Error::InvalidInput("kernel grids must start at s > 0".into()));
    }
    let (gx, gw) = gauss_legendre(8);

    let mut s = vec![g.x[0]];
    let mut node_index = vec![0usize];
    let mut seg = Vec::new(); // grid interval of each piece
    for i in 0..g.len() - 1 {
        let (a, b) = (g.x[i], g.x[i + 1]);
        let qa = p.q_prime(a, g.dy[i]);
        let qb = p.q_prime(b, g.dy[i + 1]);
        let est = 0.5 * (qa + qb) * (b - a);
        let m = ((est / PIECE_DQ).ceil().max(((b - a) / PIECE_H).ceil())).max(1.0) as usize;
        for k in 1..=m {
            s.push(if k == m { b } else { a + (b - a) * k as f64 / m as f64 });
            seg.push(i);
        }
        node_index.push(s.len() - 1);
    }
    let n = s.len();
    let profile = |i: usize, x: f64| g.eval_in(i, x);

    let mut q = vec![0.0; n];
    let mut q_prime = vec![0.0; n];
    let mut phi = vec![0.0; n];
    for (idx, &x) in s.iter().enumerate() {
        let i = if idx == 0 { 0 } else { seg[idx - 1] };
        let (y, dy) = profile(i, x);
        q_prime[idx] = p.q_prime(x, dy);
        phi[idx] = p.weight.eval(x, y, dy);
    }
    // Per-piece increments of Q and the local integrals.
    let mut dq = vec![0.0; n - 1];
    let mut local = vec![0.0; n - 1];
    for piece in 0..n - 1 {
        let i = seg[piece];
        let (a, b) = (s[piece], s[piece + 1]);
        let qp = |x: f64| p.q_prime(x, profile(i, x).1);
        dq[piece] = gl5(a, b, qp);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for k in 0..gx.len() {
            let x = c + h * gx[k];
            let (y, dy) = profile(i, x);
            let w = gl5(a, x, qp);
            acc += gw[k] * p.q_prime(x, dy) * p.weight.eval(x, y, dy) * (-w).exp();
        }
        local[piece] = acc * h;
        q[piece + 1] = q[piece] + dq[piece];
    }

    let x_end = s[n - 1];
    let (k_end, j_end) = match &p.tail {
        Some(tail) => {
            let k_end = p.tail_kernel(tail, x_end)?;
            // ∫_X^∞ t⁻² K dt = (1/X) ∫_0^1 K(X/τ) dτ
            let (tx, tw) = gauss_legendre(24);
            let mut acc = 0.0;
            for k in 0..tx.len() {
                let tau = 0.5 * (tx[k] + 1.0);
                acc += 0.5 * tw[k] * p.tail_kernel(tail, x_end / tau)?;
            }
            (k_end, acc / x_end)
        }
        None => (0.0, 0.0),
    };

    let mut kk = vec![0.0; n];
    kk[n - 1] = k_end;
    for piece in (0..n - 1).rev() {
        kk[piece] = local[piece] + (-dq[piece]).exp() * kk[piece + 1];
    }
    let dk: Vec<f64> = (0..n).map(|i| q_prime[i] * (kk[i] - phi[i])).collect();
    let j = inverse_square_integral(&s, &kk, &dk, j_end);
    Ok(KernelTable { s, node_index, q, q_prime, phi, k: kk, dk, j })
}

/// Cumulative `∫_{s_i}^{s_end} t⁻² f(t) dt + end_value` from values and
/// derivatives of `f`, using the cubic Hermite interpolant on each piece.
pub fn inverse_square_integral(s: &[f64], f: &[f64], df: &[f64], end_value: f64) -> Vec<f64> {
    let n = s.len();
    let mut out = vec![0.0; n];
    out[n - 1] = end_value;
    for i in (0..n - 1).rev() {
        let (a, b) = (s[i], s[i + 1]);
        let h = b - a;
        let herm = |x: f64| {
            let t = (x - a) / h;
            let t2 = t * t;
            let t3 = t2 * t;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            (h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1]) / (x * x)
        };
        out[i] = out[i + 1] + gl5(a, b, herm);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_grid(x0: f64, x1: f64, n: usize, slope: f64, c: f64) -> QuinticGrid {
        let x: Vec<f64> = (0..n).map(|k| x0 + (x1 - x0) * k as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|v| slope * v + c).collect();
        QuinticGrid::new(x.clone(), y, vec![slope; n], vec![0.0; n]).unwrap()
    }

    #[test]
    fn normalization_is_one() {
        let g = line_grid(1.0, 20.0, 381, 1.3, 0.4);
        let tail = AsymptoticTail::fit(1.3, 20.0, 1.3 * 20.0 + 0.4, 1.3);
        for slope_in_q in [true, false] {
            let p = KernelProblem { grid: &g, tail: Some(tail), slope_in_q, weight: Weight::One, tail_eps: 1e-14 };
            let t = kernel_table(&p).unwrap();
            let worst = t.k.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "{worst:e}");
        }
    }

    #[test]
    fn gaussian_weight_closed_form() {
        // φ = 2y'/s with y = s and Q = s²/4: K(t) = ∫_t^∞ e^{(t²-s²)/4} ds.
        let g = line_grid(0.5, 12.0, 231, 1.0, 0.0);
        let tail = AsymptoticTail { slope: 1.0, a: 0.0, b: 0.0 };
        let p = KernelProblem {
            grid: &g,
            tail: Some(tail),
            slope_in_q: false,
            weight: Weight::SlopeOverS,
            tail_eps: 1e-14,
        };
        let t = kernel_table(&p).unwrap().at_nodes();
        for (i, &x) in t.x.iter().enumerate() {
            // ∫_t^∞ e^{(t²-s²)/4} ds = √π e^{t²/4} erfc(t/2)
            let exact = std::f64::consts::PI.sqrt() * scaled_erfc(0.5 * x);
            assert!((t.k[i] - exact).abs() < 1e-11 * exact.max(1.0), "x={x} {} {exact}", t.k[i]);
        }
    }

    /// `e^{z²} erfc(z)` by its continued fraction (z ≥ 0.25) or series.
    fn scaled_erfc(z: f64) -> f64 {
        if z < 2.0 {
            // erf series
            let mut term = z;
            let mut sum = z;
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= -z * z / k;
                let add = term / (2.0 * k + 1.0);
                sum += add;
                if add.abs() < 1e-18 {
                    break;
                }
            }
            (1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum) * (z * z).exp()
        } else {
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = (k as f64 / 2.0) / (z + f);
            }
            1.0 / (std::f64::consts::PI.sqrt() * (z + f))
        }
    }

    #[test]
    fn tail_fit_reproduces_endpoint() {
        let t = AsymptoticTail::fit(2.0, 30.0, 60.02, 1.999_97);
        let (y, dy) = t.eval(30.0);
        assert!((y - 60.02).abs() < 1e-12 && (dy - 1.999_97).abs() < 1e-12);
    }

    #[test]
    fn closed_form_tail_increment() {
        let t = AsymptoticTail { slope: 1.5, a: 0.7, b: -0.3 };
        let (a, b) = (3.0, 4.5);
        let direct = gl5(a, b, |s| {
            let (_, dy) = t.eval(s);
            0.5 * s * (1.0 + dy * dy)
        });
        // gl5 is not exact here; compare against a composite rule.
        let mut fine = 0.0;
        for k in 0..200 {
            let lo = a + (b - a) * k as f64 / 200.0;
            let hi = a + (b - a) * (k + 1) as f64 / 200.0;
            fine += gl5(lo, hi, |s| {
                let (_, dy) = t.eval(s);
                0.5 * s * (1.0 + dy * dy)
            });
        }
        assert!((t.dq(a, b, true) - fine).abs() < 1e-12);
        assert!((direct - fine).abs() < 1e-6);
    }

    #[test]
    fn finite_upper_limit_vanishes_at_end() {
        let g = line_grid(1.0, 5.0, 81, 1.0, 0.5);
        let p = KernelProblem { grid: &g, tail: None, slope_in_q: true, weight: Weight::Reciprocal, tail_eps: 1e-14 };
        let t = kernel_table(&p).unwrap();
        assert_eq!(*t.k.last().unwrap(), 0.0);
        assert_eq!(*t.j.last().unwrap(), 0.0);
        assert!(t.k[0] > 0.0);
    }
}
