/// Regular solution of the r-graph equation through an axis point:
/// `x = f(r) = Σ a_k r^{2k}` with `a_0 = x_b`, the unique geodesic meeting
/// the axis orthogonally at `(x_b, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSeries {
    pub x_b: f64,
    coeffs: Vec<f64>,
}

pub(crate) const AXIS_TERMS: usize = 28;

fn poly_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, ai) in a.iter().enumerate().take(n) {
        if *ai == 0.0 {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

impl AxisSeries {
    pub fn new(x_b: f64, alpha: f64) -> Self {
        let k = AXIS_TERMS;
        let mut a = vec![0.0; k + 1];
        a[0] = x_b;
        for m in 0..k {
            let len = m + 2;
            // p(ρ) = f'(r)/r and q = ρ p², as series in ρ = r².
            let p: Vec<f64> = (0..len).map(|j| if j < k { 2.0 * (j as f64 + 1.0) * a[j + 1] } else { 0.0 }).collect();
            let pp = poly_mul(&p, &p, len);
            let mut q = vec![0.0; len];
            q[1..len].copy_from_slice(&pp[..(len - 1)]);
            let mut one_q = q.clone();
            one_q[0] += 1.0;
            let p1q = poly_mul(&p, &one_q, len);
            let pq = poly_mul(&p, &q, len);
            let f1q = poly_mul(&a[..len.min(k + 1)], &one_q, len);
            let t1 = if m >= 1 { 0.5 * p1q[m - 1] } else { 0.0 };
            let rhs = t1 - alpha * pq[m] - 0.5 * f1q[m];
            let mm = m as f64;
            a[m + 1] = rhs / ((2.0 * mm + 2.0) * (2.0 * mm + 1.0 + alpha));
        }
        Self { x_b, coeffs: a }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(f(r), f'(r))` for `r ≥ 0`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let rho = r * r;
        let mut f = 0.0;
        let mut df = 0.0;
        for k in (0..self.coeffs.len()).rev() {
            f = f * rho + self.coeffs[k];
            if k >= 1 {
                df = df * rho + 2.0 * k as f64 * self.coeffs[k];
            }
        }
        (f, df * r)
    }

    /// Magnitude of the last retained term at radius `r`.
    pub fn truncation(&self, r: f64) -> f64 {
        let k = self.coeffs.len() - 1;
        (self.coeffs[k] * r.powi(2 * k as i32)).abs()
    }

    /// Leading-order axis point of the series through `(x, r)`.
    pub fn guess(x: f64, r: f64, alpha: f64) -> f64 {
        x + x * r * r / (4.0 * (alpha + 1.0))
    }

    /// Series through the point `(x, r)`, `r > 0`.
    pub fn through(x: f64, r: f64, alpha: f64) -> Self {
        let mut xb = Self::guess(x, r, alpha);
        let mut s = Self::new(xb, alpha);
        for _ in 0..60 {
            let (f, _) = s.eval(r);
            let d = x - f;
            let h = 1e-7 * xb.abs().max(1.0);
            let (fp, _) = Self::new(xb + h, alpha).eval(r);
            let slope = (fp - f) / h;
            xb += d / if slope.abs() > 0.1 { slope } else { 1.0 };
            s = Self::new(xb, alpha);
            if d.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        s
    }
}
