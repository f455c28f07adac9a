use serde::{Deserialize, Serialize};

use super::{ConicalEnd, EndSolverConfig};
use crate::error::{Error, Result};
use crate::kernel::{inverse_square_integral, kernel_table, KernelProblem, Weight};
use crate::numerics::QuinticGrid;

/// Evaluation of the representation of a graph on `[x_lo, a]` as
/// `c₁·x + c₂·u₂(x) + 2αx ∫_x^a t⁻² K_a(t) dt`, where `u₁ = x` and `u₂` are
/// the homogeneous solutions of the frozen linear equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralIdentity {
    /// Largest `|RHS - u|` over the arc nodes.
    pub residual: f64,
    /// `u(a)/a`
    pub c1: f64,
    /// `u(a) - a·u'(a)`
    pub c2: f64,
    /// Largest `|c₂·u₂|` over the arc.
    pub second_term: f64,
    /// Largest `|x u₂' - u₂ + e^{-(Q(a)-Q(x))}|` with `u₂'` by finite differences.
    pub wronskian_residual: f64,
    /// Largest value of the frozen operator applied to `u₁ = x` by
    /// five-point finite differences.
    pub frozen_residual: f64,
}

/// Evaluates the general-solution identity on a graph arc `u > 0`.
pub fn evaluate_general_identity(arc: &QuinticGrid, alpha: f64, tail_eps: f64) -> Result<GeneralIdentity> {
    if arc.y.iter().any(|u| !(*u > 0.0)) {
        return Err(Error::InvalidInput("arc must satisfy u > 0".into()));
    }
    if arc.x_min() <= 0.0 {
        return Err(Error::InvalidInput("arc must start at x > 0".into()));
    }
    let n = arc.len() - 1;
    let a = arc.x[n];
    let c1 = arc.y[n] / a;
    let c2 = arc.y[n] - a * arc.dy[n];
    let p = KernelProblem { grid: arc, tail: None, slope_in_q: true, weight: Weight::Reciprocal, tail_eps };
    let table = kernel_table(&p)?;
    let q_end = *table.q.last().unwrap();
    let e: Vec<f64> = table.q.iter().map(|q| (-(q_end - q)).exp()).collect();
    let de: Vec<f64> = e.iter().zip(&table.q_prime).map(|(e, qp)| e * qp).collect();
    let f = inverse_square_integral(&table.s, &e, &de, 0.0);

    let mut residual: f64 = 0.0;
    let mut second_term: f64 = 0.0;
    let mut u2 = Vec::with_capacity(arc.len());
    for (node, &idx) in table.node_index.iter().enumerate() {
        let x = arc.x[node];
        let u2x = x * f[idx];
        u2.push(u2x);
        let rhs = c1 * x + c2 * u2x + 2.0 * alpha * x * table.j[idx];
        residual = residual.max((rhs - arc.y[node]).abs());
        second_term = second_term.max((c2 * u2x).abs());
    }

    let mut wronskian_residual: f64 = 0.0;
    let mut frozen_residual: f64 = 0.0;
    for i in 2..arc.len().saturating_sub(2) {
        let h = arc.x[i + 1] - arc.x[i];
        let uniform = (0..4).all(|k| ((arc.x[i - 1 + k] - arc.x[i - 2 + k]) - h).abs() < 1e-9 * h);
        if !uniform {
            continue;
        }
        let x = arc.x[i];
        let d = (u2[i - 2] - 8.0 * u2[i - 1] + 8.0 * u2[i + 1] - u2[i + 2]) / (12.0 * h);
        let idx = table.node_index[i];
        wronskian_residual = wronskian_residual.max((x * d - u2[i] + e[idx]).abs());
        // Frozen operator y'' - p(x)(x y' - y) with p = (1 + u'²)/2 on y = x.
        let hf = 1e-3;
        let y = |t: f64| t;
        let ddy =
            (-y(x + 2.0 * hf) + 16.0 * y(x + hf) - 30.0 * y(x) + 16.0 * y(x - hf) - y(x - 2.0 * hf)) / (12.0 * hf * hf);
        let dy = (y(x - 2.0 * hf) - 8.0 * y(x - hf) + 8.0 * y(x + hf) - y(x + 2.0 * hf)) / (12.0 * hf);
        let pf = 0.5 * (1.0 + arc.dy[i] * arc.dy[i]);
        frozen_residual = frozen_residual.max((ddy - pf * (x * dy - y(x))).abs());
    }
    Ok(GeneralIdentity { residual, c1, c2, second_term, wronskian_residual, frozen_residual })
}

fn end_kernel(end: &ConicalEnd, lo: f64, ecfg: &EndSolverConfig) -> Result<(QuinticGrid, crate::kernel::NodeKernel)> {
    if end.sigma <= 0.0 {
        return Err(Error::InvalidInput("identity needs a conical end with sigma > 0".into()));
    }
    if !(lo > 0.0) {
        return Err(Error::InvalidInput("identity window must start at x > 0".into()));
    }
    let g = end.grid.restrict(lo, end.x_max())?;
    let p = KernelProblem {
        grid: &g,
        tail: Some(end.tail()),
        slope_in_q: true,
        weight: Weight::Reciprocal,
        tail_eps: ecfg.quad_tail_eps,
    };
    let k = kernel_table(&p)?.at_nodes();
    Ok((g, k))
}

/// Largest `|u - σx - 2αx ∫_x^∞ t⁻² K(t) dt|` over the nodes in `[lo, hi]`.
pub fn long_identity_residual(end: &ConicalEnd, lo: f64, hi: f64, ecfg: &EndSolverConfig) -> Result<f64> {
    let (g, k) = end_kernel(end, lo, ecfg)?;
    let mut worst: f64 = 0.0;
    for i in 0..g.len() {
        let x = g.x[i];
        if x > hi {
            break;
        }
        let rhs = end.sigma * x + 2.0 * end.alpha * x * k.j[i];
        worst = worst.max((g.y[i] - rhs).abs());
    }
    Ok(worst)
}

/// Residuals of the once- and twice-differentiated identity,
/// `-Ψ/2 = αK` and `u'' = -2αQ'(K - 1/u)/x`, over the nodes in `[lo, hi]`.
pub fn convexity_identity_residual(end: &ConicalEnd, lo: f64, hi: f64, ecfg: &EndSolverConfig) -> Result<f64> {
    let (g, k) = end_kernel(end, lo, ecfg)?;
    let alpha = end.alpha;
    let mut worst: f64 = 0.0;
    for i in 0..g.len() {
        let x = g.x[i];
        if x > hi {
            break;
        }
        let psi = x * g.dy[i] - g.y[i];
        worst = worst.max((-0.5 * psi - alpha * k.k[i]).abs());
        let ddu = -2.0 * alpha * k.dk[i] / x;
        worst = worst.max((g.ddy[i] - ddu).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_satisfies_identity() {
        let x: Vec<f64> = (0..=80).map(|k| 1.0 + 0.05 * k as f64).collect();
        let n = x.len();
        let rc = 2f64.sqrt();
        let g = QuinticGrid::new(x, vec![rc; n], vec![0.0; n], vec![0.0; n]).unwrap();
        let r = evaluate_general_identity(&g, 1.0, 1e-14).unwrap();
        assert!(r.residual < 1e-8, "{:e}", r.residual);
        // Finite differences on the 0.05 grid limit this to O(h⁴).
        assert!(r.wronskian_residual < 1e-4, "{:e}", r.wronskian_residual);
        assert!(r.frozen_residual < 1e-6);
    }
}
