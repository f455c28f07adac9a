use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use shrinker_core::geoflow::{CurveSample, ProfileCurve};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "s,x,r,theta,H,Psi,Phi,Lambda,kappa,event";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(out: &mut String, p: &CurveSample, event: &str) {
    let (st, sc) = (&p.state, &p.scalars);
    let vals = [st.s, st.x, st.r, st.theta, sc.h, sc.psi, sc.phi, sc.lambda, sc.kappa];
    let cells: Vec<String> = vals.iter().map(|&v| num(v)).collect();
    let _ = writeln!(out, "{},{event}", cells.join(","));
}

/// One row per sample, plus one row per event placed after the samples with
/// smaller or equal arclength.
pub fn curve_csv(curve: &ProfileCurve) -> String {
    let mut out = String::with_capacity(160 * (curve.len() + curve.events.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut ev = curve.events.iter().peekable();
    for p in &curve.samples {
        while let Some(e) = ev.peek() {
            if e.s < p.state.s {
                row(&mut out, &curve.sample_at(e.s), e.kind.name());
                ev.next();
            } else {
                break;
            }
        }
        row(&mut out, p, "");
    }
    for e in ev {
        row(&mut out, &curve.sample_at(e.s), e.kind.name());
    }
    out
}

/// Reads `s, x, r, theta` from a curve CSV, skipping event rows.
pub fn read_curve_csv(text: &str) -> CliResult<Vec<[f64; 4]>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::usage(format!("curve CSV lacks a '{name}' column")))
    };
    let idx = [col("s")?, col("x")?, col("r")?, col("theta")?];
    let ev = header.iter().position(|h| *h == "event");
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if let Some(e) = ev {
            if cells.get(e).is_some_and(|c| !c.is_empty()) {
                continue;
            }
        }
        let mut v = [0.0; 4];
        for (j, &i) in idx.iter().enumerate() {
            v[j] = cells
                .get(i)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| CliError::usage(format!("curve CSV line {}: bad value", k + 2)))?;
        }
        rows.push(v);
    }
    Ok(rows)
}

pub fn table_csv(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    tool_version: &'a str,
    config: &'a C,
    result: &'a R,
}

/// Versioned JSON report with the resolved configuration.
pub fn report_json<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> CliResult<String> {
    let env =
        Envelope { schema_version: SCHEMA_VERSION, command, tool_version: env!("CARGO_PKG_VERSION"), config, result };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::usage(format!("serializing report: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct SvgCurve {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Profile curves in the (x, r) plane with the axis and the cylinder line
/// dashed, and optional reference rays r = σx.
pub fn svg_profiles(curves: &[SvgCurve], alpha: f64, cones: &[f64]) -> String {
    let rc = (2.0 * alpha).sqrt();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, rc.max(1.0));
    for c in curves {
        for p in &c.points {
            if p[0].is_finite() && p[1].is_finite() {
                x0 = x0.min(p[0]);
                x1 = x1.max(p[0]);
                y0 = y0.min(p[1]);
                y1 = y1.max(p[1]);
            }
        }
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0);
    let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
    let (w, h) = (x1 - x0, y1 - y0);
    // SVG y grows downwards: plot (x, r) at (x, y1 - r + y0).
    let fy = |r: f64| y0 + y1 - r;
    let stroke = 0.002 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.4} {y0:.4} {w:.4} {h:.4}" width="800" height="{:.0}">"#,
        800.0 * h / w
    );
    let _ = writeln!(s, r#"<rect x="{x0:.4}" y="{y0:.4}" width="{w:.4}" height="{h:.4}" fill="white"/>"#);
    let dash = format!(
        r#"stroke="gray" stroke-width="{stroke:.5}" stroke-dasharray="{:.5} {:.5}""#,
        4.0 * stroke,
        3.0 * stroke
    );
    let _ = writeln!(s, r#"<line x1="{x0:.4}" y1="{:.4}" x2="{x1:.4}" y2="{:.4}" {dash}/>"#, fy(0.0), fy(0.0));
    let _ = writeln!(s, r#"<line x1="{x0:.4}" y1="{:.4}" x2="{x1:.4}" y2="{:.4}" {dash}/>"#, fy(rc), fy(rc));
    for &sig in cones {
        let xe = x1.min(y1 / sig);
        let _ = writeln!(s, r#"<line x1="0" y1="{:.4}" x2="{xe:.4}" y2="{:.4}" {dash}/>"#, fy(0.0), fy(sig * xe));
    }
    for (k, c) in curves.iter().enumerate() {
        let pts: Vec<String> = c
            .points
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| format!("{:.5},{:.5}", p[0], fy(p[1])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="{:.5}" points="{}"><title>{}</title></polyline>"#,
            PALETTE[k % PALETTE.len()],
            2.0 * stroke,
            pts.join(" "),
            c.label
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_skips_events() {
        let text =
            format!("{CSV_HEADER}\n0,1,2,0.5,0,0,0,0,0,\n0.1,1,2,0.5,0,0,0,0,0,vertical\n0.2,3,4,0.25,0,0,0,0,0,\n");
        let rows = read_curve_csv(&text).unwrap();
        assert_eq!(rows, vec![[0.0, 1.0, 2.0, 0.5], [0.2, 3.0, 4.0, 0.25]]);
        assert!(read_curve_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_profiles(&[SvgCurve { label: "c".into(), points: vec![[0.0, 1.0], [1.0, 2.0]] }], 1.0, &[1.0]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert_eq!(s.matches("stroke-dasharray").count(), 3);
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
