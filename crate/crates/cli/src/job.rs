use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shrinker_core::classifier::{
    brackets, classify, find_torus, scan_closed, ClassificationReport, ClassifierConfig, ClosedShot, TorusReport,
    Verdict,
};
use shrinker_core::ends::{
    picard_solve, solve_end, verify_end_properties, ConicalEnd, EndSolverConfig, PropertyReport,
};
use shrinker_core::geoflow::{
    integrate_geodesic, CurveSample, Event, GeodesicState, ProfileCurve, Termination, Window,
};
use shrinker_core::linearized::{
    axis_limit_check, sigma_limit_check, solve_linearized, AxisLimitReport, LinearizedConfig, SigmaLimitReport,
};
use shrinker_core::DomainConfig;

use crate::error::{CliError, CliResult};
use crate::output::{curve_csv, read_curve_csv, report_json, sha256_hex, svg_profiles, table_csv, SvgCurve};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Outputs {
    fn relocate(&mut self, dir: &Path) {
        for p in [&mut self.csv, &mut self.report, &mut self.svg].into_iter().flatten() {
            *p = dir.join(p.file_name().unwrap_or(p.as_os_str()));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSource {
    Init { init: [f64; 3], length: f64, window: Window },
    Csv { path: PathBuf, sha256: String },
}

/// A fully resolved command: everything needed to reproduce its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    End {
        domain: DomainConfig,
        solver: EndSolverConfig,
        sigma: f64,
        picard: bool,
        outputs: Outputs,
    },
    Sweep {
        domain: DomainConfig,
        solver: EndSolverConfig,
        sigmas: Vec<f64>,
        csv_dir: Option<PathBuf>,
        outputs: Outputs,
    },
    Geodesic {
        domain: DomainConfig,
        init: [f64; 3],
        length: f64,
        window: Window,
        outputs: Outputs,
    },
    Torus {
        domain: DomainConfig,
        classifier: ClassifierConfig,
        scan: (f64, f64, usize),
        outputs: Outputs,
    },
    Classify {
        domain: DomainConfig,
        classifier: ClassifierConfig,
        source: CurveSource,
        outputs: Outputs,
    },
    Linearized {
        domain: DomainConfig,
        linearized: LinearizedConfig,
        solver: EndSolverConfig,
        sigma_hats: Vec<f64>,
        outputs: Outputs,
    },
}

/// Files produced by a job, a one-line summary, and a failure that is
/// reported after the files are written.
#[derive(Debug, Default)]
pub struct JobOutput {
    pub files: Vec<(PathBuf, String)>,
    pub summary: String,
    pub failure: Option<CliError>,
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::End { .. } => "end",
            Job::Sweep { .. } => "sweep",
            Job::Geodesic { .. } => "geodesic",
            Job::Torus { .. } => "torus",
            Job::Classify { .. } => "classify",
            Job::Linearized { .. } => "linearized",
        }
    }

    /// The configuration part of the job, without output locations.
    pub fn config_snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        if let Some(m) = v.as_object_mut() {
            m.remove("outputs");
            m.remove("csv_dir");
        }
        v
    }

    /// Moves every output into `dir`, keeping file names.
    pub fn relocate(&mut self, dir: &Path) {
        match self {
            Job::Sweep { csv_dir, outputs, .. } => {
                if let Some(d) = csv_dir {
                    *d = dir.join(d.file_name().unwrap_or(d.as_os_str()));
                }
                outputs.relocate(dir);
            }
            Job::End { outputs, .. }
            | Job::Geodesic { outputs, .. }
            | Job::Torus { outputs, .. }
            | Job::Classify { outputs, .. }
            | Job::Linearized { outputs, .. } => outputs.relocate(dir),
        }
    }

    pub fn run(&self) -> CliResult<JobOutput> {
        match self {
            Job::End { domain, solver, sigma, picard, outputs } => {
                run_end(self, domain, solver, *sigma, *picard, outputs)
            }
            Job::Sweep { domain, solver, sigmas, csv_dir, outputs } => {
                run_sweep(self, domain, solver, sigmas, csv_dir.as_deref(), outputs)
            }
            Job::Geodesic { domain, init, length, window, outputs } => {
                run_geodesic(self, domain, *init, *length, window, outputs)
            }
            Job::Torus { domain, classifier, scan, outputs } => run_torus(self, domain, classifier, *scan, outputs),
            Job::Classify { domain, classifier, source, outputs } => {
                run_classify(self, domain, classifier, source, outputs)
            }
            Job::Linearized { domain, linearized, solver, sigma_hats, outputs } => {
                run_linearized(self, domain, linearized, solver, sigma_hats, outputs)
            }
        }
    }
}

fn profile_points(curve: &ProfileCurve) -> Vec<[f64; 2]> {
    curve.positions()
}

fn end_curve(end: &ConicalEnd, cfg: &DomainConfig) -> CliResult<ProfileCurve> {
    Ok(end.to_profile_curve(end.x_max(), cfg)?)
}

#[derive(Serialize)]
struct PicardSummary {
    b: f64,
    iterations: usize,
    tau_hat: f64,
    final_step: f64,
    max_difference: f64,
}

#[derive(Serialize)]
struct EndResult {
    sigma: f64,
    u0: f64,
    /// `sqrt(2α) - u(0)`.
    u0_margin: f64,
    u0_prime: f64,
    residual: f64,
    a_used: Vec<f64>,
    u0_history: Vec<f64>,
    degenerate: Option<String>,
    properties: PropertyReport,
    all_properties_ok: bool,
    picard: Option<PicardSummary>,
}

fn run_end(
    job: &Job,
    cfg: &DomainConfig,
    ecfg: &EndSolverConfig,
    sigma: f64,
    picard: bool,
    out: &Outputs,
) -> CliResult<JobOutput> {
    let end = solve_end(sigma, cfg, ecfg)?;
    info!("sigma = {sigma}: u(0) = {:.15}, residual {:.3e}", end.u0(), end.residual);
    let properties = verify_end_properties(&end, ecfg)?;
    let picard = if picard {
        let p = picard_solve(sigma, cfg, ecfg)?;
        let r = &p.record;
        Some(PicardSummary {
            b: r.b,
            iterations: r.iterations,
            tau_hat: r.tau_hat,
            final_step: r.final_step,
            max_difference: p.max_difference(&end),
        })
    } else {
        None
    };
    let result = EndResult {
        sigma,
        u0: end.u0(),
        u0_margin: (2.0 * cfg.alpha).sqrt() - end.u0(),
        u0_prime: end.grid.dy[0],
        residual: end.residual,
        a_used: end.a_used.clone(),
        u0_history: end.u0_history.clone(),
        degenerate: end.degenerate.clone(),
        all_properties_ok: properties.all_ok(),
        properties,
        picard,
    };
    let mut o = JobOutput {
        summary: format!(
            "sigma = {sigma}: u(0) = {:.12}, properties {}",
            result.u0,
            if result.all_properties_ok { "pass" } else { "fail" }
        ),
        ..Default::default()
    };
    let need_curve = out.csv.is_some() || out.svg.is_some();
    let curve = if need_curve { Some(end_curve(&end, cfg)?) } else { None };
    if let (Some(p), Some(c)) = (&out.csv, &curve) {
        o.files.push((p.clone(), curve_csv(c)));
    }
    if let (Some(p), Some(c)) = (&out.svg, &curve) {
        let svg = svg_profiles(
            &[SvgCurve { label: format!("sigma = {sigma}"), points: profile_points(c) }],
            cfg.alpha,
            &[sigma],
        );
        o.files.push((p.clone(), svg));
    }
    if let Some(p) = &out.report {
        o.files.push((p.clone(), report_json(job.name(), &job.config_snapshot(), &result)?));
    }
    Ok(o)
}

#[derive(Serialize)]
struct SweepEntry {
    sigma: f64,
    u0: Option<f64>,
    residual: Option<f64>,
    all_properties_ok: Option<bool>,
    /// File name inside the CSV directory.
    csv: Option<String>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepResult {
    entries: Vec<SweepEntry>,
    /// u(0) decreasing along increasing sigma among the successful runs.
    u0_decreasing: bool,
    failures: usize,
}

pub fn sweep_csv_name(sigma: f64) -> String {
    format!("end_sigma_{sigma}.csv")
}

fn run_sweep(
    job: &Job,
    cfg: &DomainConfig,
    ecfg: &EndSolverConfig,
    sigmas: &[f64],
    csv_dir: Option<&Path>,
    out: &Outputs,
) -> CliResult<JobOutput> {
    if sigmas.is_empty() {
        return Err(CliError::usage("sweep needs at least one sigma"));
    }
    let solved: Vec<CliResult<(ConicalEnd, bool, ProfileCurve)>> = sigmas
        .par_iter()
        .map(|&s| {
            let end = solve_end(s, cfg, ecfg)?;
            let ok = verify_end_properties(&end, ecfg)?.all_ok();
            let curve = end_curve(&end, cfg)?;
            Ok((end, ok, curve))
        })
        .collect();
    let mut o = JobOutput::default();
    let mut entries = Vec::new();
    let mut svg = Vec::new();
    for (&sigma, r) in sigmas.iter().zip(solved) {
        match r {
            Ok((end, ok, curve)) => {
                if let Some(d) = csv_dir {
                    o.files.push((d.join(sweep_csv_name(sigma)), curve_csv(&curve)));
                }
                svg.push(SvgCurve { label: format!("sigma = {sigma}"), points: profile_points(&curve) });
                entries.push(SweepEntry {
                    sigma,
                    u0: Some(end.u0()),
                    residual: Some(end.residual),
                    all_properties_ok: Some(ok),
                    csv: csv_dir.map(|_| sweep_csv_name(sigma)),
                    error: None,
                });
            }
            Err(e) => {
                if e.exit_code() == 2 {
                    return Err(e);
                }
                warn!("sigma = {sigma}: {e}");
                entries.push(SweepEntry {
                    sigma,
                    u0: None,
                    residual: None,
                    all_properties_ok: None,
                    csv: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let failures = entries.iter().filter(|e| e.error.is_some()).count();
    let mut ok: Vec<(f64, f64)> = entries.iter().filter_map(|e| e.u0.map(|u| (e.sigma, u))).collect();
    ok.sort_by(|a, b| a.0.total_cmp(&b.0));
    let u0_decreasing = ok.windows(2).all(|w| w[1].1 < w[0].1);
    let result = SweepResult { entries, u0_decreasing, failures };
    if let Some(p) = &out.svg {
        o.files.push((p.clone(), svg_profiles(&svg, cfg.alpha, &[1.0])));
    }
    if let Some(p) = &out.report {
        o.files.push((p.clone(), report_json(job.name(), &job.config_snapshot(), &result)?));
    }
    o.summary =
        format!("{} of {} ends solved; u(0) decreasing: {u0_decreasing}", sigmas.len() - failures, sigmas.len());
    if failures == sigmas.len() {
        o.failure = Some(CliError::Core(shrinker_core::Error::NoConvergence("every sigma in the sweep failed".into())));
    }
    Ok(o)
}

#[derive(Serialize)]
struct GeodesicResult {
    termination: Termination,
    length: f64,
    samples: usize,
    closure_gap: f64,
    events: Vec<Event>,
}

fn run_geodesic(
    job: &Job,
    cfg: &DomainConfig,
    init: [f64; 3],
    length: f64,
    window: &Window,
    out: &Outputs,
) -> CliResult<JobOutput> {
    let curve = integrate_geodesic(GeodesicState::new(0.0, init[0], init[1], init[2]), length, window, cfg)?;
    let result = GeodesicResult {
        termination: curve.termination,
        length: curve.length(),
        samples: curve.len(),
        closure_gap: curve.closure_gap(),
        events: curve.events.clone(),
    };
    let mut o = JobOutput {
        summary: format!(
            "{} samples, {} events, terminated by {:?}",
            result.samples,
            result.events.len(),
            result.termination
        ),
        ..Default::default()
    };
    if let Some(p) = &out.csv {
        o.files.push((p.clone(), curve_csv(&curve)));
    }
    if let Some(p) = &out.svg {
        o.files.push((
            p.clone(),
            svg_profiles(&[SvgCurve { label: "geodesic".into(), points: profile_points(&curve) }], cfg.alpha, &[]),
        ));
    }
    if let Some(p) = &out.report {
        o.files.push((p.clone(), report_json(job.name(), &job.config_snapshot(), &result)?));
    }
    Ok(o)
}

#[derive(Serialize)]
struct Refinement {
    bracket: (f64, f64),
    r0: Option<f64>,
    verdict: Option<Verdict>,
    error: Option<String>,
}

#[derive(Serialize)]
struct TorusResult {
    shots: Vec<ClosedShot>,
    brackets: Vec<(f64, f64)>,
    refinements: Vec<Refinement>,
    torus: Option<TorusReport>,
}

pub fn scan_points(scan: (f64, f64, usize)) -> Vec<f64> {
    let (lo, hi, n) = scan;
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

fn run_torus(
    job: &Job,
    cfg: &DomainConfig,
    ccfg: &ClassifierConfig,
    scan: (f64, f64, usize),
    out: &Outputs,
) -> CliResult<JobOutput> {
    let shots = scan_closed(&scan_points(scan), cfg, ccfg)?;
    let br = brackets(&shots);
    info!("{} brackets from {} shots", br.len(), shots.len());
    let mut refinements = Vec::new();
    let mut found = None;
    for &b in &br {
        match find_torus(b, cfg, ccfg) {
            Ok((curve, rep)) => {
                let v = classify(&curve, cfg, ccfg).verdict;
                debug!("bracket {b:?}: r0 = {}, verdict {}", rep.r0, v.name());
                refinements.push(Refinement { bracket: b, r0: Some(rep.r0), verdict: Some(v), error: None });
                if v == Verdict::ClosedTwoCrossings {
                    found = Some((curve, rep));
                    break;
                }
            }
            Err(e) => refinements.push(Refinement { bracket: b, r0: None, verdict: None, error: Some(e.to_string()) }),
        }
    }
    let mut o = JobOutput::default();
    if let Some((curve, rep)) = &found {
        o.summary = format!(
            "closed curve from r0 = {:.12}: crossing radii {:?}, closure gap {:.1e}",
            rep.r0, rep.crossing_radii, rep.closure_gap
        );
        if let Some(p) = &out.csv {
            o.files.push((p.clone(), curve_csv(curve)));
        }
        if let Some(p) = &out.svg {
            o.files.push((
                p.clone(),
                svg_profiles(
                    &[SvgCurve { label: "closed geodesic".into(), points: profile_points(curve) }],
                    cfg.alpha,
                    &[],
                ),
            ));
        }
    } else {
        o.summary = format!("no closed curve other than the sphere among {} brackets", br.len());
        o.failure = Some(CliError::Core(shrinker_core::Error::NoConvergence(o.summary.clone())));
    }
    let result = TorusResult { shots, brackets: br, refinements, torus: found.map(|f| f.1) };
    if let Some(p) = &out.report {
        o.files.push((p.clone(), report_json(job.name(), &job.config_snapshot(), &result)?));
    }
    Ok(o)
}

/// Rebuilds a curve from `s, x, r, theta` rows; it is marked closed when
/// its ends meet within `closure_gap_tol`.
pub fn curve_from_rows(rows: &[[f64; 4]], cfg: &DomainConfig, ccfg: &ClassifierConfig) -> CliResult<ProfileCurve> {
    let samples: Vec<CurveSample> =
        rows.iter().map(|v| CurveSample::on_geodesic(v[0], v[1], v[2], v[3], cfg.alpha)).collect();
    let open = ProfileCurve::from_samples(samples.clone(), Termination::ReachedMaxLength, false, cfg)?;
    if open.closure_gap() < ccfg.closure_gap_tol {
        return Ok(ProfileCurve::from_samples(samples, Termination::Closed, true, cfg)?);
    }
    Ok(open)
}

fn run_classify(
    job: &Job,
    cfg: &DomainConfig,
    ccfg: &ClassifierConfig,
    source: &CurveSource,
    out: &Outputs,
) -> CliResult<JobOutput> {
    let curve = match source {
        CurveSource::Init { init, length, window } => {
            integrate_geodesic(GeodesicState::new(0.0, init[0], init[1], init[2]), *length, window, cfg)?
        }
        CurveSource::Csv { path, sha256 } => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let actual = sha256_hex(text.as_bytes());
            if !sha256.is_empty() && &actual != sha256 {
                return Err(CliError::Mismatch(format!(
                    "{}: input changed since the run was recorded",
                    path.display()
                )));
            }
            curve_from_rows(&read_curve_csv(&text)?, cfg, ccfg)?
        }
    };
    let report: ClassificationReport = classify(&curve, cfg, ccfg);
    let mut o = JobOutput { summary: format!("verdict: {}", report.verdict.name()), ..Default::default() };
    if let Verdict::ConicalEnd { sigma_hat } = report.verdict {
        o.summary.push_str(&format!(" (sigma = {sigma_hat:.8})"));
    }
    if let Some(p) = &out.csv {
        o.files.push((p.clone(), curve_csv(&curve)));
    }
    if let Some(p) = &out.svg {
        o.files.push((
            p.clone(),
            svg_profiles(
                &[SvgCurve { label: report.verdict.name().into(), points: profile_points(&curve) }],
                cfg.alpha,
                &[],
            ),
        ));
    }
    if let Some(p) = &out.report {
        o.files.push((p.clone(), report_json(job.name(), &job.config_snapshot(), &report)?));
    }
    Ok(o)
}

#[derive(Serialize)]
struct LinearizedResult {
    c1: f64,
    normalization: String,
    identity_residual: f64,
    defect: f64,
    sign_changes: usize,
    min: f64,
    max: f64,
    roots: Vec<f64>,
    axis_limit: AxisLimitReport,
    sigma_limit: Option<SigmaLimitReport>,
}

fn run_linearized(
    job: &Job,
    cfg: &DomainConfig,
    lcfg: &LinearizedConfig,
    ecfg: &EndSolverConfig,
    sigma_hats: &[f64],
    out: &Outputs,
) -> CliResult<JobOutput> {
    if out.svg.is_some() {
        return Err(CliError::usage("linearized does not write SVG"));
    }
    let sol = solve_linearized(cfg, lcfg)?;
    let axis_limit = axis_limit_check(&sol, &[0.1, 0.01, 1e-3], lcfg.quad_tail_eps, 1e-5)?;
    let sigma_limit = if sigma_hats.is_empty() { None } else { Some(sigma_limit_check(&sol, sigma_hats, cfg, ecfg)?) };
    let (min, max) = sol.min_max();
    let result = LinearizedResult {
        c1: sol.c1,
        normalization: sol.normalization.clone(),
        identity_residual: sol.identity_residual,
        defect: sol.defect,
        sign_changes: sol.sign_changes(),
        min,
        max,
        roots: sol.roots()?,
        axis_limit,
        sigma_limit,
    };
    let mut o = JobOutput {
        summary: format!(
            "identity residual {:.3e}, defect {:.3e}, {} sign change(s)",
            result.identity_residual, result.defect, result.sign_changes
        ),
        ..Default::default()
    };
    if let Some(p) = &out.csv {
        let g = &sol.grid;
        let rows: Vec<Vec<f64>> = (0..g.len()).map(|i| vec![g.x[i], g.y[i], g.dy[i]]).collect();
        o.files.push((p.clone(), table_csv("r,g,dg", &rows)));
    }
    if let Some(p) = &out.report {
        o.files.push((p.clone(), report_json(job.name(), &job.config_snapshot(), &result)?));
    }
    Ok(o)
}
