use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent and integrator tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    /// `α = n - 1` for a hypersurface of dimension `n`; any real `α ≥ 0`.
    pub alpha: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Below this radius a curve meeting the axis nearly orthogonally is
    /// snapped to an axis endpoint unconditionally.
    pub r_axis_eps: f64,
    /// Zero tolerance for refined event locations.
    pub event_eps: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Radius inside which the regular axis series is matched to the curve.
    pub axis_capture_radius: f64,
    /// Largest tangent-angle mismatch (radians) accepted by the series match.
    pub axis_capture_tol: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            r_axis_eps: 1e-6,
            event_eps: 1e-10,
            max_step: 0.1,
            min_step: 1e-13,
            axis_capture_radius: 0.1,
            axis_capture_tol: 1e-7,
        }
    }
}

impl DomainConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha, ..Self::default() }
    }

    /// Configuration for hypersurfaces of dimension `n` (`α = n - 1`).
    pub fn for_dimension(n: u32) -> Self {
        Self::with_alpha(n as f64 - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be >= 0 (got {})", self.alpha)));
        }
        let tols = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("r_axis_eps", self.r_axis_eps),
            ("event_eps", self.event_eps),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
            ("axis_capture_radius", self.axis_capture_radius),
            ("axis_capture_tol", self.axis_capture_tol),
        ];
        for (name, v) in tols {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive (got {v})")));
            }
        }
        if self.min_step >= self.max_step {
            return Err(Error::InvalidInput("min_step must be smaller than max_step".into()));
        }
        Ok(())
    }

    /// Radius of the cylinder solution, `sqrt(2α)`.
    pub fn cylinder_radius(&self) -> f64 {
        (2.0 * self.alpha).sqrt()
    }

    /// Radius of the sphere solution, `sqrt(2(α + 1))`.
    pub fn sphere_radius(&self) -> f64 {
        (2.0 * (self.alpha + 1.0)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_match_dimension() {
        let cfg = DomainConfig::for_dimension(2);
        assert_eq!(cfg.cylinder_radius(), 2f64.sqrt());
        assert_eq!(cfg.sphere_radius(), 2.0);
        let cfg = DomainConfig::for_dimension(7);
        assert!((cfg.cylinder_radius() - 12f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let cfg = DomainConfig { rel_tol: 0.0, ..DomainConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = DomainConfig { min_step: 1.0, ..DomainConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = DomainConfig::with_alpha(-0.5);
        assert!(cfg.validate().is_err());
        assert!(DomainConfig::default().validate().is_ok());
    }
}
