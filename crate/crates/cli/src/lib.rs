//! Command-line front end: argument and config resolution, CSV/JSON/SVG
//! emission and run manifests.

pub mod args;
pub mod error;
pub mod job;
pub mod manifest;
pub mod output;
pub mod settings;

use std::path::Path;
use std::time::Instant;

use log::info;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};
pub use job::{CurveSource, Job, JobOutput, Outputs};
pub use manifest::RunManifest;

use crate::args::{CommonArgs, OutputArgs};
use crate::output::{sha256_hex, write_file};
use crate::settings::{parse_init, parse_list, parse_scan, Settings};
use shrinker_core::geoflow::Window;

/// Inverse slopes used for the plane-limit comparison.
pub const SIGMA_HATS: [f64; 3] = [0.25, 0.125, 0.0625];

fn outputs(o: &OutputArgs) -> Outputs {
    Outputs { csv: o.csv.clone(), report: o.report.clone(), svg: o.svg.clone() }
}

fn settings(c: &CommonArgs) -> CliResult<Settings> {
    Settings::load(c.config.as_deref())
}

fn window(half: f64, reflect: bool) -> CliResult<Window> {
    if !half.is_finite() || half <= 0.0 {
        return Err(CliError::usage(format!("window must be positive (got {half})")));
    }
    let w = Window::new(-half, half, half);
    Ok(if reflect { w.reflecting() } else { w })
}

/// Turns parsed arguments into a fully resolved job; `None` for `replay`.
pub fn resolve(cmd: &Command) -> CliResult<Option<(Job, Option<&Path>)>> {
    let job = match cmd {
        Command::End(a) => {
            let s = settings(&a.common)?;
            let job = Job::End {
                domain: settings::domain(&a.common, &s)?,
                solver: settings::end_solver(a.xmax, &s)?,
                sigma: a.sigma,
                picard: a.picard,
                outputs: outputs(&a.out),
            };
            (job, a.common.manifest.as_deref())
        }
        Command::Sweep(a) => {
            let s = settings(&a.common)?;
            let job = Job::Sweep {
                domain: settings::domain(&a.common, &s)?,
                solver: settings::end_solver(a.xmax, &s)?,
                sigmas: parse_list(&a.sigmas, "sigmas")?,
                csv_dir: a.csv_dir.clone(),
                outputs: Outputs { csv: None, report: a.report.clone(), svg: a.svg.clone() },
            };
            (job, a.common.manifest.as_deref())
        }
        Command::Geodesic(a) => {
            let s = settings(&a.common)?;
            let job = Job::Geodesic {
                domain: settings::domain(&a.common, &s)?,
                init: parse_init(&a.init)?,
                length: s.pick(a.length, "length", 10.0)?,
                window: window(s.pick(a.window, "window", 100.0)?, !a.stop_at_axis)?,
                outputs: outputs(&a.out),
            };
            (job, a.common.manifest.as_deref())
        }
        Command::Torus(a) => {
            let s = settings(&a.common)?;
            let job = Job::Torus {
                domain: settings::domain(&a.common, &s)?,
                classifier: settings::classifier(&s)?,
                scan: parse_scan(&a.scan)?,
                outputs: outputs(&a.out),
            };
            (job, a.common.manifest.as_deref())
        }
        Command::Classify(a) => {
            let s = settings(&a.common)?;
            let source = match (&a.init, &a.input) {
                (Some(init), None) => CurveSource::Init {
                    init: parse_init(init)?,
                    length: s.pick(a.length, "length", 20.0)?,
                    window: window(s.pick(a.window, "window", 100.0)?, true)?,
                },
                (None, Some(path)) => {
                    let text = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
                    CurveSource::Csv { path: path.clone(), sha256: sha256_hex(&text) }
                }
                _ => return Err(CliError::usage("classify needs exactly one of --init or --input")),
            };
            let job = Job::Classify {
                domain: settings::domain(&a.common, &s)?,
                classifier: settings::classifier(&s)?,
                source,
                outputs: outputs(&a.out),
            };
            (job, a.common.manifest.as_deref())
        }
        Command::Linearized(a) => {
            let s = settings(&a.common)?;
            let job = Job::Linearized {
                domain: settings::domain(&a.common, &s)?,
                linearized: settings::linearized(a.r_max, &s)?,
                solver: settings::end_solver(None, &s)?,
                sigma_hats: if a.no_sigma_limit { Vec::new() } else { SIGMA_HATS.to_vec() },
                outputs: outputs(&a.out),
            };
            (job, a.common.manifest.as_deref())
        }
        Command::Replay(_) => return Ok(None),
    };
    Ok(Some(job))
}

fn write_all(files: &[(std::path::PathBuf, String)]) -> CliResult<()> {
    for (p, c) in files {
        write_file(p, c)?;
        info!("wrote {}", p.display());
    }
    Ok(())
}

/// Runs a job, writes its files and optionally a manifest.
pub fn execute(job: &Job, manifest: Option<&Path>) -> CliResult<String> {
    let t = Instant::now();
    let out = job.run()?;
    write_all(&out.files)?;
    if let Some(m) = manifest {
        RunManifest::new(job, &out.files, t.elapsed().as_secs_f64()).write(m)?;
    }
    match out.failure {
        Some(e) => Err(e),
        None => Ok(out.summary),
    }
}

/// Re-runs the job recorded in a manifest and checks every output checksum.
pub fn replay(manifest: &Path, out_dir: Option<&Path>) -> CliResult<String> {
    let m = RunManifest::read(manifest)?;
    let mut job = m.job.clone();
    if let Some(d) = out_dir {
        job.relocate(d);
    }
    let out = job.run()?;
    write_all(&out.files)?;
    if out.files.len() != m.outputs.len() {
        return Err(CliError::Mismatch(format!(
            "replay produced {} files, the manifest lists {}",
            out.files.len(),
            m.outputs.len()
        )));
    }
    let mut bad = Vec::new();
    for ((path, content), rec) in out.files.iter().zip(&m.outputs) {
        if sha256_hex(content.as_bytes()) != rec.sha256 {
            bad.push(path.display().to_string());
        }
    }
    if !bad.is_empty() {
        return Err(CliError::Mismatch(format!("checksum mismatch: {}", bad.join(", "))));
    }
    Ok(format!("replayed {}: {} output(s) identical", m.command, m.outputs.len()))
}

pub fn run(cli: &Cli) -> CliResult<String> {
    if let Command::Replay(a) = &cli.command {
        return replay(&a.manifest, a.out_dir.as_deref());
    }
    let (job, manifest) = resolve(&cli.command)?.expect("non-replay command");
    execute(&job, manifest)
}
