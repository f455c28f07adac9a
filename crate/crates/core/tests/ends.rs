use std::f64::consts::SQRT_2;

use proptest::prelude::*;
use shrinker_core::ends::*;
use shrinker_core::numerics::QuinticGrid;
use shrinker_core::DomainConfig;

fn cfg() -> DomainConfig {
    DomainConfig::for_dimension(2)
}

fn end(sigma: f64) -> ConicalEnd {
    solve_end(sigma, &cfg(), &EndSolverConfig::default()).unwrap()
}

// u_σ(0) and u_σ'(0) for α = 1, from an independent DOP853 run with
// asymptotic anchor data at a = 1600.
const U0: [(f64, f64, f64); 8] = [
    (0.05, 1.4124259987, 1e-7),
    (0.25, 1.367888975755654, 1e-8),
    (0.5, 1.2574957982009312, 1e-8),
    (1.0, 1.075532898232054, 1e-8),
    (2.0, 0.9486824195592323, 1e-8),
    (4.0, 0.9016394421907639, 1e-8),
    (8.0, 0.8884180772622863, 1e-8),
    (16.0, 0.8850092011849598, 1e-8),
];

#[test]
fn frozen_axis_values() {
    for (sigma, u0, tol) in U0 {
        let e = end(sigma);
        assert!((e.u0() - u0).abs() < tol, "sigma {sigma}: {} vs {u0}", e.u0());
        assert!(e.residual < 1e-8, "sigma {sigma}: residual {:e}", e.residual);
    }
    assert!((end(1.0).grid.dy[0] - 0.37220062233089113).abs() < 1e-8);
    assert!((end(16.0).grid.dy[0] - 9.258931899767248).abs() < 1e-7);
}

#[test]
fn axis_value_trend_in_sigma() {
    let u1 = end(1.0).u0();
    assert!(u1 > 0.0 && u1 < SQRT_2);
    let us: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&s| end(s).u0()).collect();
    assert!(us.windows(2).all(|w| w[1] < w[0]));
    // The large-slope limit stays well above zero.
    assert!(us[2] > 0.85);
    assert!((end(0.05).u0() - SQRT_2).abs() < 1e-2);
}

#[test]
fn end_properties() {
    let e = EndSolverConfig::default();
    for sigma in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let r = verify_end_properties(&end(sigma), &e).unwrap();
        assert!(r.all_ok(), "sigma {sigma}: {r:?}");
        assert!(r.convexity_identity.ok, "{r:?}");
        assert!(r.ratio_decreasing.ok);
        assert!(r.residual.ok);
        assert!((-1.2..=-0.8).contains(&r.value_decay_exponent));
        assert!((-2.2..=-1.8).contains(&r.slope_decay_exponent));
    }
}

#[test]
fn cylinder_report() {
    let e = EndSolverConfig::default();
    let r = verify_end_properties(&ConicalEnd::cylinder(1.0, &e).unwrap(), &e).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("cylinder: equality case")));
}

#[test]
fn picard_agrees_with_ivp() {
    let e = EndSolverConfig::default();
    for sigma in [0.5, 1.0, 2.0] {
        let p = picard_solve(sigma, &cfg(), &e).unwrap();
        assert!(p.record.tau_hat < 1.0);
        assert!(p.record.final_step < 1e-10);
        let d = p.max_difference(&end(sigma));
        assert!(d < 1e-6, "sigma {sigma}: {d:e}");
    }
}

#[test]
fn contraction_uniform_in_sigma() {
    let b = default_b(1.0, 0.5);
    let e = EndSolverConfig { picard_b: Some(b), ..Default::default() };
    let taus: Vec<f64> =
        [0.5, 1.0, 1.5, 2.0].iter().map(|&s| picard_solve_with_b(s, b, &cfg(), &e).unwrap().record.tau_hat).collect();
    assert!(taus.iter().all(|t| *t < 0.5), "{taus:?}");
}

fn tail_function(end: &ConicalEnd, b: f64) -> QuinticGrid {
    let g = end.grid.restrict(b, end.x_max()).unwrap();
    let s = end.sigma;
    QuinticGrid::new(
        g.x.clone(),
        g.x.iter().zip(&g.y).map(|(x, u)| u - s * x).collect(),
        g.dy.iter().map(|d| d - s).collect(),
        g.ddy.clone(),
    )
    .unwrap()
}

#[test]
fn t_fixed_point_and_bound() {
    let e = EndSolverConfig::default();
    let end = end(1.0);
    let b = default_b(1.0, 1.0);
    let v = tail_function(&end, b);
    let out = apply_t(1.0, &v, &cfg(), &e).unwrap().grid;
    let c1 = (0..v.len()).map(|i| (out.y[i] - v.y[i]).abs() + (out.dy[i] - v.dy[i]).abs()).fold(0.0, f64::max);
    assert!(c1 < 1e-6, "{c1:e}");
    for i in 0..out.len() {
        assert!(out.y[i] > 0.0 && out.y[i] <= 2.0 / out.x[i]);
    }
}

#[test]
fn s_fixed_point_and_envelope() {
    let e = EndSolverConfig::default();
    let end = end(1.0);
    let (f, tail) = end.inverse_grid(1.0).unwrap();
    let out = apply_s(1.0, &f, tail, &cfg(), &e).unwrap().grid;
    let mut worst: f64 = 0.0;
    let mut c: f64 = 0.0;
    for i in 0..f.len() {
        let r = f.x[i];
        c = c.max((out.y[i] - r).abs() * r);
        if (3.0..=30.0).contains(&r) {
            worst = worst.max((out.y[i] - f.y[i]).abs());
        }
    }
    assert!(worst < 1e-6, "{worst:e}");
    assert!(c.is_finite() && c < 10.0, "{c}");
}

#[test]
fn general_identity_on_anchor_arc() {
    let e = EndSolverConfig::default();
    let t = solve_end_ivp(1.0, 10.0, &cfg(), &e).unwrap();
    let arc = t.grid.restrict(1.0, 10.0).unwrap();
    let r = evaluate_general_identity(&arc, 1.0, e.quad_tail_eps).unwrap();
    assert!(r.residual < 1e-7, "{r:?}");
    assert!((r.c1 - 1.0).abs() < 1e-14);
    assert!(r.c2.abs() < 1e-14);
    assert!(r.second_term < 1e-12);
}

#[test]
fn long_identity_on_end() {
    let e = EndSolverConfig::default();
    for sigma in [0.5, 1.0, 2.0] {
        let r = long_identity_residual(&end(sigma), 2.0, 40.0, &e).unwrap();
        assert!(r < 1e-7, "sigma {sigma}: {r:e}");
    }
}

#[test]
fn anchor_solutions_lose_graphicality() {
    let e = EndSolverConfig::default();
    let t = solve_end_ivp(1.0, 20.0, &cfg(), &e).unwrap();
    assert!(t.envelope_excess <= 0.0);
    let r = blowup_experiment(1.0, 20.0, &cfg()).unwrap();
    assert!(r.x_inf > 20.0 && r.x_inf <= 40.0, "{}", r.x_inf);
}

#[test]
fn blowup_bounds() {
    for x0 in [1.0, 2.0, 5.0] {
        let r = blowup_experiment(SQRT_2, x0, &cfg()).unwrap();
        assert!(r.x_inf <= 2.0 * x0, "{r:?}");
        assert!(r.tangent_bound_ok && r.vertical_bound_ok && r.psi_monotone_ok, "{r:?}");
    }
    let r = blowup_experiment(1.0, 5.0, &cfg()).unwrap();
    assert!(r.x_inf < 5.0 * std::f64::consts::FRAC_PI_4 + 5.0);
}

#[test]
fn maximal_extension_turns_vertical() {
    let end = end(1.0);
    let c = extend_maximal(&end, 10.0, 5.0, &cfg()).unwrap();
    let first = c.samples[0].state;
    assert!((first.x - 10.0).abs() < 1e-12);
    assert!(c.samples.iter().any(|s| s.state.x < 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn t_image_is_admissible(scale in 0.0f64..0.9, sigma in 0.5f64..2.0) {
        let b = default_b(1.0, sigma);
        let x: Vec<f64> = (0..=80).map(|k| b + 0.25 * k as f64).collect();
        // v = c/x with |v'| = c/x² below the admissible envelope 4/(σx²).
        let c = scale * 4.0 / sigma;
        let v = QuinticGrid::new(
            x.clone(),
            x.iter().map(|x| c / x).collect(),
            x.iter().map(|x| -c / (x * x)).collect(),
            x.iter().map(|x| 2.0 * c / (x * x * x)).collect(),
        ).unwrap();
        let out = apply_t(sigma, &v, &cfg(), &EndSolverConfig::default()).unwrap().grid;
        for ((xi, yi), dyi) in x.iter().zip(&out.y).zip(&out.dy) {
            prop_assert!(*yi > 0.0);
            prop_assert!(*yi <= 2.0 / (sigma * xi) * (1.0 + 1e-12));
            prop_assert!(dyi.abs() < 4.0 / (sigma * xi * xi));
        }
    }
}
