use serde::{Deserialize, Serialize};

use super::{check_sigma, ConicalEnd, EndSolverConfig, PicardRecord};
use crate::config::DomainConfig;
use crate::error::{Error, Result};
use crate::kernel::{kernel_table, AsymptoticTail, KernelProblem, NodeKernel, Weight};
use crate::numerics::QuinticGrid;

/// Image of an operator on a grid plus the kernel data it was built from.
#[derive(Debug, Clone)]
pub struct OperatorOutput {
    /// Values, first and second derivatives of the image.
    pub grid: QuinticGrid,
    pub kernel: NodeKernel,
}

/// Start of the Picard domain: `max(4, sqrt(8α(1+σ²))/σ)`.
pub fn default_b(alpha: f64, sigma: f64) -> f64 {
    ((8.0 * alpha * (1.0 + sigma * sigma)).sqrt() / sigma).max(4.0)
}

/// `[T_σ v](x) = 2αx ∫_x^∞ t⁻² K(t) dt` with `K` built from
/// `u = σs + v` and weight `1/u`. Returns the image with its first two
/// derivatives.
pub fn apply_t(sigma: f64, v: &QuinticGrid, cfg: &DomainConfig, ecfg: &EndSolverConfig) -> Result<OperatorOutput> {
    check_sigma(sigma)?;
    let alpha = cfg.alpha;
    for i in 0..v.len() {
        let x = v.x[i];
        let envelope = 4.0 * alpha / (sigma * x * x);
        if v.y[i] < 0.0 || v.dy[i].abs() >= envelope {
            return Err(Error::InvariantViolated(format!(
                "v outside the admissible set at x = {x}: v = {:e}, v' = {:e}, envelope {envelope:e}",
                v.y[i], v.dy[i]
            )));
        }
    }
    let u = QuinticGrid::new(
        v.x.clone(),
        v.x.iter().zip(&v.y).map(|(x, y)| sigma * x + y).collect(),
        v.dy.iter().map(|d| sigma + d).collect(),
        v.ddy.clone(),
    )?;
    let n = u.len() - 1;
    let tail = AsymptoticTail::fit(sigma, u.x[n], u.y[n], u.dy[n]);
    let p = KernelProblem {
        grid: &u,
        tail: Some(tail),
        slope_in_q: true,
        weight: Weight::Reciprocal,
        tail_eps: ecfg.quad_tail_eps,
    };
    let k = kernel_table(&p)?.at_nodes();
    let mut y = Vec::with_capacity(k.x.len());
    let mut dy = Vec::with_capacity(k.x.len());
    let mut ddy = Vec::with_capacity(k.x.len());
    for i in 0..k.x.len() {
        let x = k.x[i];
        y.push(2.0 * alpha * x * k.j[i]);
        dy.push(2.0 * alpha * (k.j[i] - k.k[i] / x));
        ddy.push(-2.0 * alpha * k.dk[i] / x);
    }
    Ok(OperatorOutput { grid: QuinticGrid::new(k.x.clone(), y, dy, ddy)?, kernel: k })
}

/// `[S_σ f](r) = r/σ - αr ∫_r^∞ t⁻² K(t) dt` for an r-graph `x = f(r)`
/// given on a grid plus its tail, with weight `2f'/s`.
pub fn apply_s(
    sigma: f64,
    f: &QuinticGrid,
    tail: AsymptoticTail,
    cfg: &DomainConfig,
    ecfg: &EndSolverConfig,
) -> Result<OperatorOutput> {
    check_sigma(sigma)?;
    let alpha = cfg.alpha;
    let p = KernelProblem {
        grid: f,
        tail: Some(tail),
        slope_in_q: true,
        weight: Weight::SlopeOverS,
        tail_eps: ecfg.quad_tail_eps,
    };
    let k = kernel_table(&p)?.at_nodes();
    let mut y = Vec::new();
    let mut dy = Vec::new();
    let mut ddy = Vec::new();
    for i in 0..k.x.len() {
        let r = k.x[i];
        y.push(r / sigma - alpha * r * k.j[i]);
        dy.push(1.0 / sigma - alpha * k.j[i] + alpha * k.k[i] / r);
        ddy.push(alpha * k.dk[i] / r);
    }
    Ok(OperatorOutput { grid: QuinticGrid::new(k.x.clone(), y, dy, ddy)?, kernel: k })
}

/// Fixed point of `T_σ` on `[b, x_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PicardSolution {
    pub sigma: f64,
    pub x: Vec<f64>,
    /// `v = u - σx` and its derivative.
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub record: PicardRecord,
}

impl PicardSolution {
    pub fn u(&self) -> Vec<f64> {
        self.x.iter().zip(&self.v).map(|(x, v)| self.sigma * x + v).collect()
    }

    /// Largest `|u_picard - u_end|` at the common nodes.
    pub fn max_difference(&self, end: &ConicalEnd) -> f64 {
        self.x
            .iter()
            .zip(self.u())
            .filter(|(x, _)| **x <= end.x_max())
            .map(|(x, u)| (u - end.eval(*x).0).abs())
            .fold(0.0, f64::max)
    }
}

/// Picard iteration from `v = 0`, with `b` chosen by the default rule and
/// doubled after divergence.
pub fn picard_solve(sigma: f64, cfg: &DomainConfig, ecfg: &EndSolverConfig) -> Result<PicardSolution> {
    check_sigma(sigma)?;
    let mut b = ecfg.picard_b.unwrap_or_else(|| default_b(cfg.alpha, sigma));
    let mut last_err = None;
    for _ in 0..=ecfg.picard_b_doublings {
        if b >= ecfg.x_max - 1.0 {
            break;
        }
        match picard_solve_with_b(sigma, b, cfg, ecfg) {
            Ok(sol) => return Ok(sol),
            Err(e @ (Error::Divergence(_) | Error::InvariantViolated(_))) => {
                log::info!("picard sigma={sigma} b={b}: {e}; doubling b");
                last_err = Some(e);
                b *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Divergence(format!("no admissible b below x_max for sigma = {sigma}"))))
}

/// Picard iteration on `[b, x_max]` for a fixed `b`.
pub fn picard_solve_with_b(sigma: f64, b: f64, cfg: &DomainConfig, ecfg: &EndSolverConfig) -> Result<PicardSolution> {
    check_sigma(sigma)?;
    ecfg.validate()?;
    if !(b > 0.0 && b < ecfg.x_max) {
        return Err(Error::InvalidInput(format!("b must lie in (0, x_max) (got {b})")));
    }
    let m = ((ecfg.x_max - b) / ecfg.h).ceil().max(2.0) as usize;
    let x: Vec<f64> =
        (0..=m).map(|k| if k == m { ecfg.x_max } else { b + (ecfg.x_max - b) * k as f64 / m as f64 }).collect();
    let n = x.len();
    let mut v = QuinticGrid::new(x.clone(), vec![0.0; n], vec![0.0; n], vec![0.0; n])?;
    let mut steps = Vec::new();
    let mut tau_hat: f64 = 0.0;
    for it in 1..=ecfg.picard_max_iter {
        let next = apply_t(sigma, &v, cfg, ecfg)?.grid;
        let dv0 = next.y.iter().zip(&v.y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dv1 = next.dy.iter().zip(&v.dy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let step = dv0 + dv1;
        if let Some(&prev) = steps.last() {
            if prev > 1e-9 {
                tau_hat = tau_hat.max(step / prev);
            }
        }
        steps.push(step);
        v = next;
        if tau_hat >= 1.0 {
            return Err(Error::Divergence(format!("measured contraction factor {tau_hat:.3} at b = {b}")));
        }
        if step < ecfg.picard_tol {
            return Ok(PicardSolution {
                sigma,
                x: v.x.clone(),
                v: v.y.clone(),
                dv: v.dy.clone(),
                record: PicardRecord { b, iterations: it, final_step: step, tau_hat, steps },
            });
        }
    }
    Err(Error::NoConvergence(format!("Picard iteration did not reach {:e} at b = {b}", ecfg.picard_tol)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_rule_values() {
        assert_eq!(default_b(1.0, 1.0), 4.0);
        assert!((default_b(1.0, 0.5) - 2.0 * 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(default_b(1.0, 2.0), 4.0);
    }

    #[test]
    fn s_of_zero_is_leading_term() {
        let cfg = DomainConfig::for_dimension(2);
        let e = EndSolverConfig::default();
        let x: Vec<f64> = (0..41).map(|k| 2.0 + 0.25 * k as f64).collect();
        let n = x.len();
        let f = QuinticGrid::new(x.clone(), vec![0.0; n], vec![0.0; n], vec![0.0; n]).unwrap();
        let zero = AsymptoticTail { slope: 0.0, a: 0.0, b: 0.0 };
        let out = apply_s(2.0, &f, zero, &cfg, &e).unwrap();
        for i in 0..n {
            assert_eq!(out.grid.y[i], x[i] / 2.0);
        }
    }

    #[test]
    fn t_rejects_inadmissible_input() {
        let cfg = DomainConfig::for_dimension(2);
        let e = EndSolverConfig::default();
        let x: Vec<f64> = (0..41).map(|k| 4.0 + 0.25 * k as f64).collect();
        let n = x.len();
        let v = QuinticGrid::new(x, vec![-0.1; n], vec![0.0; n], vec![0.0; n]).unwrap();
        assert!(matches!(apply_t(1.0, &v, &cfg, &e), Err(Error::InvariantViolated(_))));
    }
}
