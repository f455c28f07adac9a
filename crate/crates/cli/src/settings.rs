use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use shrinker_core::classifier::ClassifierConfig;
use shrinker_core::ends::EndSolverConfig;
use shrinker_core::linearized::LinearizedConfig;
use shrinker_core::DomainConfig;

use crate::args::CommonArgs;
use crate::error::{CliError, CliResult};

const KEYS: &[&str] = &[
    "n",
    "alpha",
    "rel_tol",
    "abs_tol",
    "max_step",
    "min_step",
    "event_eps",
    "r_axis_eps",
    "axis_capture_radius",
    "axis_capture_tol",
    "x_max",
    "h",
    "x_geometric",
    "geometric_nodes",
    "ivp_tol",
    "richardson_tol",
    "picard_tol",
    "picard_max_iter",
    "quad_tail_eps",
    "closure_tol",
    "closure_gap_tol",
    "membership_tol",
    "tail_fraction",
    "shot_length",
    "shot_window",
    "length",
    "window",
    "r_max",
    "lin_r_min",
    "lin_h",
    "lin_geometric_nodes",
    "lin_tol",
];

/// Values from an optional `key = value` file.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", k + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::usage(format!("config line {}: unknown key '{key}'", k + 1)));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)
            }
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| CliError::usage(format!("config key '{key}': cannot parse '{v}'")))
            }
        }
    }

    /// Flag, then file, then default.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }
}

pub fn domain(common: &CommonArgs, s: &Settings) -> CliResult<DomainConfig> {
    let alpha = match (common.alpha, common.n) {
        (Some(a), _) => a,
        (None, Some(n)) => n as f64 - 1.0,
        (None, None) => match (s.get::<f64>("alpha")?, s.get::<u32>("n")?) {
            (Some(_), Some(_)) => return Err(CliError::usage("config sets both n and alpha")),
            (Some(a), None) => a,
            (None, Some(n)) => n as f64 - 1.0,
            (None, None) => 1.0,
        },
    };
    if alpha < 0.0 {
        return Err(CliError::usage("n must be at least 1"));
    }
    let d = DomainConfig::with_alpha(alpha);
    let cfg = DomainConfig {
        alpha,
        rel_tol: s.pick(common.rel_tol, "rel_tol", d.rel_tol)?,
        abs_tol: s.pick(common.abs_tol, "abs_tol", d.abs_tol)?,
        max_step: s.pick(common.max_step, "max_step", d.max_step)?,
        min_step: s.pick(None, "min_step", d.min_step)?,
        event_eps: s.pick(None, "event_eps", d.event_eps)?,
        r_axis_eps: s.pick(None, "r_axis_eps", d.r_axis_eps)?,
        axis_capture_radius: s.pick(None, "axis_capture_radius", d.axis_capture_radius)?,
        axis_capture_tol: s.pick(None, "axis_capture_tol", d.axis_capture_tol)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn end_solver(xmax: Option<f64>, s: &Settings) -> CliResult<EndSolverConfig> {
    let d = EndSolverConfig::default();
    let e = EndSolverConfig {
        x_max: s.pick(xmax, "x_max", d.x_max)?,
        h: s.pick(None, "h", d.h)?,
        x_geometric: s.pick(None, "x_geometric", d.x_geometric)?,
        geometric_nodes: s.pick(None, "geometric_nodes", d.geometric_nodes)?,
        ivp_tol: s.pick(None, "ivp_tol", d.ivp_tol)?,
        richardson_tol: s.pick(None, "richardson_tol", d.richardson_tol)?,
        picard_tol: s.pick(None, "picard_tol", d.picard_tol)?,
        picard_max_iter: s.pick(None, "picard_max_iter", d.picard_max_iter)?,
        quad_tail_eps: s.pick(None, "quad_tail_eps", d.quad_tail_eps)?,
        ..d
    };
    e.validate()?;
    Ok(e)
}

pub fn classifier(s: &Settings) -> CliResult<ClassifierConfig> {
    let d = ClassifierConfig::default();
    let c = ClassifierConfig {
        closure_tol: s.pick(None, "closure_tol", d.closure_tol)?,
        closure_gap_tol: s.pick(None, "closure_gap_tol", d.closure_gap_tol)?,
        membership_tol: s.pick(None, "membership_tol", d.membership_tol)?,
        tail_fraction: s.pick(None, "tail_fraction", d.tail_fraction)?,
        shot_length: s.pick(None, "shot_length", d.shot_length)?,
        shot_window: s.pick(None, "shot_window", d.shot_window)?,
        ..d
    };
    c.validate()?;
    Ok(c)
}

pub fn linearized(r_max: Option<f64>, s: &Settings) -> CliResult<LinearizedConfig> {
    let d = LinearizedConfig::default();
    let l = LinearizedConfig {
        r_max: s.pick(r_max, "r_max", d.r_max)?,
        r_min: s.pick(None, "lin_r_min", d.r_min)?,
        h: s.pick(None, "lin_h", d.h)?,
        geometric_nodes: s.pick(None, "lin_geometric_nodes", d.geometric_nodes)?,
        tol: s.pick(None, "lin_tol", d.tol)?,
        quad_tail_eps: s.pick(None, "quad_tail_eps", d.quad_tail_eps)?,
        ..d
    };
    l.validate()?;
    Ok(l)
}

/// Comma-separated list of numbers.
pub fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::usage(format!("{what}: empty list")));
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::usage(format!("{what}: cannot parse '{p}'"))))
        .collect()
}

/// `"x,r,theta"`.
pub fn parse_init(text: &str) -> CliResult<[f64; 3]> {
    let v = parse_list(text, "init")?;
    match v.as_slice() {
        [x, r, t] => Ok([*x, *r, *t]),
        _ => Err(CliError::usage(format!("init: expected x,r,theta (got {} values)", v.len()))),
    }
}

/// `"lo:hi:intervals"`.
pub fn parse_scan(text: &str) -> CliResult<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::usage(format!("scan: expected lo:hi:intervals (got '{text}')"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n == 0 {
        return Err(CliError::usage(format!("scan: need 0 < lo < hi and intervals > 0 (got '{text}')")));
    }
    Ok((lo, hi, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let s = Settings::parse("alpha = 2\nrel_tol = 1e-9 # comment\n\n").unwrap();
        let c = domain(&CommonArgs { rel_tol: Some(1e-11), ..Default::default() }, &s).unwrap();
        assert_eq!(c.alpha, 2.0);
        assert_eq!(c.rel_tol, 1e-11);
        let c = domain(&CommonArgs { n: Some(3), ..Default::default() }, &s).unwrap();
        assert_eq!(c.alpha, 2.0);
        assert_eq!(domain(&CommonArgs::default(), &Settings::default()).unwrap().alpha, 1.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(Settings::parse("sigma = 1").is_err());
        assert!(Settings::parse("alpha 1").is_err());
        assert!(Settings::parse("alpha = x").unwrap().get::<f64>("alpha").is_err());
    }

    #[test]
    fn scan_and_lists() {
        assert_eq!(parse_scan("0.3:3.0:270").unwrap(), (0.3, 3.0, 270));
        assert!(parse_scan("3:1:5").is_err());
        assert!(parse_list("", "sigmas").is_err());
        assert_eq!(parse_init("0, 2, 0").unwrap(), [0.0, 2.0, 0.0]);
    }
}
