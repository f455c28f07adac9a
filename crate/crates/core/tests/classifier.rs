use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use shrinker_core::classifier::*;
use shrinker_core::ends::{extend_maximal, solve_end, EndSolverConfig};
use shrinker_core::geoflow::*;
use shrinker_core::DomainConfig;

fn cfg() -> DomainConfig {
    DomainConfig::for_dimension(2)
}

fn run(x: f64, r: f64, theta: f64, length: f64) -> ProfileCurve {
    integrate_geodesic(GeodesicState::new(0.0, x, r, theta), length, &Window::default().reflecting(), &cfg()).unwrap()
}

fn verdict(c: &ProfileCurve) -> ClassificationReport {
    classify(c, &cfg(), &ClassifierConfig::default())
}

// Torus from (0, r0, 0) for α = 1, cross-checked by a DOP853 shooting run at
// rtol 1e-12.
const TORUS_R0: f64 = 0.4371239670957403;
const TORUS_OUTER: f64 = 3.3147082665540317;

#[test]
fn sphere_census() {
    let c = run(-2.0, 0.0, FRAC_PI_2, 4.0 * PI);
    let r = verdict(&c);
    assert_eq!(r.census.vertical_points.len(), 2);
    assert_eq!(r.census.horizontal_points.len(), 2);
    assert_eq!(r.census.raxis_crossings, 2);
    assert!(r.census.higgins_ok && r.census.maximal_graphs_ok);
    assert_eq!(r.verdict, Verdict::Sphere);
    assert!(self_intersection(&c).is_none());
}

#[test]
fn exact_solutions() {
    let s2 = 2f64.sqrt();
    let cyl = run(-5.0, s2, 0.0, 10.0);
    let r = verdict(&cyl);
    assert_eq!(r.verdict, Verdict::Cylinder);
    assert!(r.census.degenerate.is_some());
    assert_eq!(verdict(&run(0.0, 1.0, FRAC_PI_2, 3.0)).verdict, Verdict::RAxis);
    assert_eq!(verdict(&run(0.0, 2.0, 0.0, 20.0)).verdict, Verdict::Sphere);
}

#[test]
fn quadrant_tags() {
    assert_eq!(Quadrant::of(1.0, 2.0, 1.0, 1e-10), Quadrant::First);
    assert_eq!(Quadrant::of(-1.0, -2.0, 1.0, 1e-10), Quadrant::Second);
    assert_eq!(Quadrant::of(-1.0, 1.0, 1.0, 1e-10), Quadrant::Third);
    assert_eq!(Quadrant::of(1.0, 0.5, 1.0, 1e-10), Quadrant::Fourth);
    assert_eq!(Quadrant::of(1e-12, 3.0, 1.0, 1e-10), Quadrant::Boundary);
}

#[test]
fn trumpet_tail_is_conical() {
    let e = EndSolverConfig::default();
    for sigma in [0.5, 1.0, 2.0] {
        let end = solve_end(sigma, &cfg(), &e).unwrap();
        let c = end.to_profile_curve(end.x_max(), &cfg()).unwrap();
        let r = verdict(&c);
        assert!(r.census.vertical_points.is_empty());
        match r.verdict {
            Verdict::ConicalEnd { sigma_hat } => assert!((sigma_hat - sigma).abs() < 1e-4, "{sigma_hat}"),
            v => panic!("sigma {sigma}: {v:?}"),
        }
    }
}

#[test]
fn extended_trumpet_is_not_embedded() {
    let e = EndSolverConfig::default();
    for sigma in [0.5, 1.0] {
        let end = solve_end(sigma, &cfg(), &e).unwrap();
        let c = extend_maximal(&end, end.x_max(), 30.0, &cfg()).unwrap();
        let r = verdict(&c);
        assert_eq!(r.verdict, Verdict::NonEmbedded);
        let hit = r.self_intersection.unwrap();
        assert!(hit.residual < 1e-10, "{hit:?}");
        assert!(r.census.higgins_ok && r.census.maximal_graphs_ok, "{:?}", r.census.notes);
    }
}

#[test]
fn sphere_shot_closes() {
    let s = shoot_closed(2.0, &cfg(), &ClassifierConfig::default()).unwrap();
    assert!(s.ok());
    assert!(s.residual.abs() < 1e-9);
    assert!((s.crossing_r.unwrap() + 2.0).abs() < 1e-8);
    assert!(shoot_closed(-1.0, &cfg(), &ClassifierConfig::default()).is_err());
}

#[test]
fn torus_search() {
    let cc = ClassifierConfig::default();
    let r0s: Vec<f64> = (0..180).map(|k| 0.2 + 0.01 * k as f64).collect();
    let shots = scan_closed(&r0s, &cfg(), &cc).unwrap();
    let br = brackets(&shots);
    assert!(!br.is_empty());
    let (curve, rep) = find_torus(br[0], &cfg(), &cc).unwrap();
    assert!((rep.r0 - TORUS_R0).abs() < 1e-8, "{}", rep.r0);
    assert!(rep.residual.abs() < 1e-10);
    assert!(rep.closure_gap < 1e-8);
    assert_eq!(rep.census.raxis_crossings, 2);
    assert_eq!(rep.census.horizontal_points.len(), 2);
    assert!(rep.census.horizontal_points.iter().all(|h| h.x.abs() < 1e-8));
    assert_eq!(rep.crossing_radii.len(), 2);
    assert!((rep.crossing_radii[1] - TORUS_OUTER).abs() < 1e-8);
    assert!(rep.min_r > 0.0);
    assert!(rep.self_intersection.is_none());
    assert!(rep.census.higgins_ok && rep.census.maximal_graphs_ok);
    assert_eq!(verdict(&curve).verdict, Verdict::ClosedTwoCrossings);
}

#[test]
fn invalid_bracket_is_rejected() {
    let cc = ClassifierConfig::default();
    assert!(matches!(find_torus((0.5, 0.6), &cfg(), &cc), Err(shrinker_core::Error::InvalidBracket(_))));
    assert!(matches!(find_torus((0.6, 0.5), &cfg(), &cc), Err(shrinker_core::Error::InvalidBracket(_))));
}

#[test]
fn wound_trajectory_self_intersects() {
    let c = run(1.0, 1.0, 0.3, 100.0);
    let r = verdict(&c);
    assert!(r.census.vertical_points.len() >= 7);
    assert_eq!(r.verdict, Verdict::NonEmbedded);
    assert!(r.self_intersection.unwrap().residual < 1e-10);
}

#[test]
fn figure_eight_curve() {
    // Two circles of the sphere family joined at the origin are not geodesics,
    // so exercise the curve path on a sampled lemniscate.
    let n = 2000;
    let samples: Vec<CurveSample> = (0..=n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let (x, r) = (3.0 * t.sin(), 3.0 + t.sin() * t.cos());
            let theta = (t.cos() * t.cos() - t.sin() * t.sin()).atan2(3.0 * t.cos());
            CurveSample::on_geodesic(t, x, r, theta, 1.0)
        })
        .collect();
    let c = ProfileCurve::from_samples(samples, Termination::Closed, true, &cfg()).unwrap();
    let hits = self_intersections(&c);
    assert_eq!(hits.len(), 1, "{hits:?}");
    assert!(hits[0].point[0].abs() < 1e-6 && (hits[0].point[1] - 3.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn census_laws(x in -3.0f64..3.0, r in 0.3f64..3.0, theta in -PI..PI, length in 5.0f64..40.0) {
        let c = integrate_geodesic(GeodesicState::new(0.0, x, r, theta), length, &Window::new(-30.0, 30.0, 30.0).reflecting(), &cfg()).unwrap();
        let rep = verdict(&c);
        prop_assert!(rep.census.higgins_ok, "{:?}", rep.census.notes);
        prop_assert!(rep.census.maximal_graphs_ok, "{:?}", rep.census.notes);
        if rep.census.vertical_points.len() >= 7 {
            prop_assert!(rep.self_intersection.is_some());
        }
    }
}
