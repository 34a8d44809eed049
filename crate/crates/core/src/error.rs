//! Error type shared across the crate.

use thiserror::Error;

use crate::model::IntersectionId;

/// Errors produced by model construction, file I/O, and pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    /// File exists but its contents violate the documented schema.
    #[error("schema violation: {0}")]
    Schema(String),

    /// A domain invariant was violated while building a value.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// First consecutive pair of a route that is not a graph segment.
    #[error("route violation at pair index {index}: ({from}, {to}) is not a segment of the graph")]
    RouteViolation {
        index: usize,
        from: IntersectionId,
        to: IntersectionId,
    },

    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    CoordinateRange { lat: f64, lon: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Segment-library coverage holes discovered while building an HMM.
    #[error("segment library does not cover {} triples; first missing: {first}", .count)]
    UncoveredTriples { count: usize, first: String },

    #[error("{0}")]
    Mismatch(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}
