//! Domain types shared by every pipeline stage: power traces, road graphs,
//! routes, and reference libraries, together with their file formats.

mod geo;
mod graph;
mod library;
mod trace;

pub use geo::{haversine_distance, LatLon, LocalFrame};
pub use graph::{
    feasible_triples, validate_route, IntersectionId, RoadGraph, Route, Segment, TimedRoute,
};
pub use library::{ReferenceLibrary, TripleKey};
pub use trace::{slice_trace, PowerTrace};
