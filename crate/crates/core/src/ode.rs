//! Dormand–Prince 5(4) integrator with PI step-size control and the
//! standard fourth-order continuous extension.

use crate::error::{Error, Result};

/// Right-hand side `y' = f(t, y)`. Returning `None` marks a state outside
/// the domain of the system; the step is then rejected and retried smaller.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Option<[f64; N]>;
}

impl<F, const N: usize> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> Option<[f64; N]> {
        self(t, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, h_max: f64::INFINITY, h_min: 1e-14, h_init: None, max_steps: 50_000_000 }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn with_h_min(mut self, h_min: f64) -> Self {
        self.h_min = h_min;
        self
    }

    pub fn with_h_init(mut self, h: f64) -> Self {
        self.h_init = Some(h);
        self
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f1: [f64; N],
    cont: [[f64; N]; 4],
}

impl<const N: usize> Segment<N> {
    /// Dense output at `t` between `t0` and `t1`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / (self.t1 - self.t0);
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.y0[i]
                + th * (self.cont[0][i] + th1 * (self.cont[1][i] + th * (self.cont[2][i] + th1 * self.cont[3][i])));
        }
        out
    }
}

/// Stepwise integrator; each call to [`Dopri5::step`] yields one accepted
/// step until `t_end` is reached.
pub struct Dopri5<'a, S, const N: usize> {
    sys: &'a S,
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h: f64,
    dir: f64,
    t_end: f64,
    ctl: StepControl,
    facold: f64,
    steps: usize,
}

impl<'a, S: OdeSystem<N>, const N: usize> Dopri5<'a, S, N> {
    pub fn new(sys: &'a S, t0: f64, y0: [f64; N], t_end: f64, ctl: StepControl) -> Result<Self> {
        let f = sys.rhs(t0, &y0).ok_or(Error::InvalidInput(format!("initial state outside the domain at t = {t0}")))?;
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut me = Self { sys, t: t0, y: y0, f, h: 0.0, dir, t_end, ctl, facold: 1e-4, steps: 0 };
        me.h = match ctl.h_init {
            Some(h) => h.abs().min(ctl.h_max),
            None => me.initial_step(),
        };
        Ok(me)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    fn scale(&self, a: &[f64; N], b: &[f64; N], i: usize) -> f64 {
        self.ctl.abs_tol + self.ctl.rel_tol * a[i].abs().max(b[i].abs())
    }

    fn initial_step(&self) -> f64 {
        let span = (self.t_end - self.t).abs();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sk = self.scale(&self.y, &self.y, i);
            d0 += (self.y[i] / sk).powi(2);
            d1 += (self.f[i] / sk).powi(2);
        }
        d0 = (d0 / N as f64).sqrt();
        d1 = (d1 / N as f64).sqrt();
        let mut h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h = h.min(self.ctl.h_max).min(span);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = self.y[i] + self.dir * h * self.f[i];
        }
        let d2 = match self.sys.rhs(self.t + self.dir * h, &y1) {
            Some(f1) => {
                let mut acc = 0.0;
                for i in 0..N {
                    acc += ((f1[i] - self.f[i]) / self.scale(&self.y, &self.y, i)).powi(2);
                }
                (acc / N as f64).sqrt() / h
            }
            None => return (h * 0.1).max(self.ctl.h_min),
        };
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
        (100.0 * h).min(h1).min(self.ctl.h_max).min(span).max(self.ctl.h_min)
    }

    /// Advances one accepted step. Returns `Ok(None)` once `t_end` is reached.
    pub fn step(&mut self) -> Result<Option<Segment<N>>> {
        const SAFE: f64 = 0.9;
        const BETA: f64 = 0.04;
        const EXPO1: f64 = 0.2 - BETA * 0.75;
        const FACC1: f64 = 5.0;
        const FACC2: f64 = 0.1;
        let mut rejected = false;
        loop {
            let remaining = (self.t_end - self.t) * self.dir;
            if remaining <= 1e-15 * self.t_end.abs().max(1.0) {
                return Ok(None);
            }
            if self.steps >= self.ctl.max_steps {
                return Err(Error::StepBudget { t: self.t });
            }
            let mut h = self.h.min(self.ctl.h_max);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let hs = h * self.dir;
            self.steps += 1;
            match self.attempt(hs) {
                Some((y1, k, err)) => {
                    if err <= 1.0 {
                        let fac11 = err.powf(EXPO1);
                        let mut fac = fac11 / self.facold.powf(BETA);
                        fac = (fac / SAFE).clamp(FACC2, FACC1);
                        let mut hnew = h / fac;
                        if rejected {
                            hnew = hnew.min(h);
                        }
                        self.facold = err.max(1e-4);
                        let t0 = self.t;
                        let t1 = if last { self.t_end } else { self.t + hs };
                        let seg = self.build_segment(t0, t1, hs, y1, &k);
                        self.t = t1;
                        self.y = y1;
                        self.f = k[6];
                        self.h = hnew.min(self.ctl.h_max);
                        return Ok(Some(seg));
                    }
                    let fac11 = err.powf(EXPO1);
                    self.h = h / (fac11 / SAFE).min(FACC1);
                }
                None => {
                    self.h = h * 0.2;
                }
            }
            rejected = true;
            if self.h < self.ctl.h_min {
                return Err(Error::StepUnderflow { t: self.t });
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn attempt(&self, h: f64) -> Option<([f64; N], [[f64; N]; 7], f64)> {
        let t = self.t;
        let y = &self.y;
        let k1 = self.f;
        let mut yt = [0.0; N];
        for i in 0..N {
            yt[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = self.sys.rhs(t + C2 * h, &yt)?;
        for i in 0..N {
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = self.sys.rhs(t + C3 * h, &yt)?;
        for i in 0..N {
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = self.sys.rhs(t + C4 * h, &yt)?;
        for i in 0..N {
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = self.sys.rhs(t + C5 * h, &yt)?;
        for i in 0..N {
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = self.sys.rhs(t + h, &yt)?;
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        if y1.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let k7 = self.sys.rhs(t + h, &y1)?;
        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / self.scale(y, &y1, i)).powi(2);
        }
        err = (err / N as f64).sqrt();
        if !err.is_finite() {
            return None;
        }
        Some((y1, [k1, k2, k3, k4, k5, k6, k7], err))
    }

    fn build_segment(&self, t0: f64, t1: f64, h: f64, y1: [f64; N], k: &[[f64; N]; 7]) -> Segment<N> {
        let mut cont = [[0.0; N]; 4];
        for i in 0..N {
            let ydiff = y1[i] - self.y[i];
            let bspl = h * k[0][i] - ydiff;
            cont[0][i] = ydiff;
            cont[1][i] = bspl;
            cont[2][i] = ydiff - h * k[6][i] - bspl;
            cont[3][i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
        }
        Segment { t0, t1, y0: self.y, y1, f1: k[6], cont }
    }
}

/// Integrates from `t0` to `t1` and returns the final state.
pub fn integrate_to<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    ctl: StepControl,
) -> Result<[f64; N]> {
    let mut st = Dopri5::new(sys, t0, y0, t1, ctl)?;
    while st.step()?.is_some() {}
    Ok(st.y())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let sys = |_t: f64, y: &[f64; 2]| Some([y[1], -y[0]]);
        let y =
            integrate_to(&sys, 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, StepControl::new(1e-12, 1e-12)).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let sys = |_t: f64, y: &[f64; 1]| Some([y[0]]);
        let y = integrate_to(&sys, 1.0, [1.0f64.exp()], 0.0, StepControl::new(1e-12, 1e-12)).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn dense_output_is_fourth_order_accurate() {
        let sys = |t: f64, _y: &[f64; 1]| Some([t.cos()]);
        let ctl = StepControl::new(1e-10, 1e-10).with_h_max(0.2);
        let mut st = Dopri5::new(&sys, 0.0, [0.0], 6.0, ctl).unwrap();
        let mut worst: f64 = 0.0;
        while let Some(seg) = st.step().unwrap() {
            for k in 1..10 {
                let t = seg.t0 + (seg.t1 - seg.t0) * k as f64 / 10.0;
                worst = worst.max((seg.eval(t)[0] - t.sin()).abs());
            }
        }
        assert!(worst < 5e-9, "dense output error {worst:e}");
    }

    #[test]
    fn domain_violations_shrink_the_step() {
        // y' = -1/(2y), y(0)=1: y = sqrt(1-t); undefined past t = 1.
        let sys = |_t: f64, y: &[f64; 1]| if y[0] > 0.0 { Some([-0.5 / y[0]]) } else { None };
        let y = integrate_to(&sys, 0.0, [1.0], 0.99, StepControl::new(1e-10, 1e-10)).unwrap();
        assert!((y[0] - 0.1).abs() < 1e-7, "{}", y[0]);
        let r = integrate_to(&sys, 0.0, [1.0], 1.5, StepControl::new(1e-10, 1e-10));
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::StepBudget { .. })));
    }
}
