//! Profile-curve geodesics: right-hand sides, derived scalars, the arclength
//! integrator with axis continuation, events and graph views.

mod axis;
mod curve;
mod events;
mod graph;
mod rhs;

pub use axis::AxisSeries;
pub use curve::{integrate_geodesic, AxisPolicy, CurveSample, DegenerateLine, ProfileCurve, Termination, Window};
pub use events::{detect_events, Event, EventKind};
pub use graph::{graph_view, rgraph_view, GraphArc};
pub use rhs::{geodesic_rhs, rgraph_rhs, ssode_rhs, ssode_third, tangent, DerivedScalars, GeodesicState};
