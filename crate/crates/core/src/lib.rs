//! Location inference from aggregate power-consumption time series.
//!
//! A phone's cellular radio draws more power the weaker its signal, and
//! signal strength along a road is a stable function of position. This crate
//! turns that observation into three estimators over a prerecorded reference
//! library:
//!
//! * [`classifier`] — which known route does a power profile belong to
//!   (1-NN over normalized DTW);
//! * [`tracker`] — where along a known route is the device right now
//!   (subsequence DTW / OSB with a lock-state motion model);
//! * [`inference`] — which unseen route through a road graph was driven
//!   (HMM particle filter over per-segment profiles, with two decoders).
//!
//! The [`synth`] module provides a generative world model (path loss,
//! shadowing, hand-off hysteresis, signal-to-power mapping) so every
//! estimator can be exercised against ground truth, and [`eval`] implements
//! the metric suite used to score them.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod inference;
pub mod model;
pub mod oracles;
pub mod preprocess;
pub mod similarity;
pub mod synth;
pub mod tracker;

pub use classifier::{classify_route, cross_validate, ClassificationResult, CrossValidationRow};
pub use error::{Error, Result};
pub use eval::{
    destination_hit, levenshtein_routes, random_route_baseline, route_inference_report,
    tracking_error_report, EvalReport, InferenceOutcome,
};
pub use inference::{
    build_model, estimate_pair, iterative_majority_vote, most_frequent_route, run_particle_filter,
    HmmModel, InferenceConfig, RouteHypothesis,
};
pub use model::{
    haversine_distance, slice_trace, validate_route, IntersectionId, LatLon, PowerTrace,
    ReferenceLibrary, RoadGraph, Route, Segment, TimedRoute, TripleKey,
};
pub use preprocess::{preprocess, PreprocessConfig};
pub use similarity::{
    default_jump_cost, dtw_distance, normalized_dtw, osb, subsequence_dtw, subsequence_osb,
    Alignment,
};
pub use synth::{
    build_reference_library, simulate_drive, DrivePlan, DriveRecord, LibrarySpec, World,
    WorldConfig,
};
pub use tracker::{
    estimate_location, run_tracking, step_with_motion_model, Matcher, TrackTick, TrackerConfig,
    TrackerState, TrackingEstimate,
};
