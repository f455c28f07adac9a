//! Numerical laboratory for rotationally symmetric self-shrinkers of mean
//! curvature flow.
//!
//! A hypersurface of revolution in `R^{n+1}` generated by a planar profile
//! curve `(x(s), r(s))` shrinks self-similarly exactly when the profile is a
//! geodesic of the conformal half-plane metric
//! `r^{2α} e^{-(x²+r²)/2} (dx² + dr²)` with `α = n - 1`.
//!
//! - [`geoflow`]: right-hand sides, derived scalars, the arclength integrator
//!   with axis continuation, event detection and graph views.
//! - [`ends`]: the asymptotically conical "trumpet" ends `u_σ`, built from
//!   initial value problems and independently by Picard iteration.
//! - [`linearized`]: the linearization of the r-graph equation at the plane.
//! - [`classifier`]: census of vertical/horizontal points, self-intersection
//!   search, closed-geodesic shooting and verdicts.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classifier;
pub mod config;
pub mod ends;
pub mod error;
pub mod geoflow;
pub mod kernel;
pub mod linearized;
pub mod numerics;
pub mod ode;

pub use config::DomainConfig;
pub use error::{Error, Result};
