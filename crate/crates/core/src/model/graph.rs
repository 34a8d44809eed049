//! Road graph: intersections, directed segments with geometry, and routes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{haversine_distance, LatLon};

/// Identifier of a road intersection. Small nonnegative integers, matching
/// the notation used for test routes (`8-5-6-7-...`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntersectionId(pub u32);

impl fmt::Display for IntersectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed road segment between two intersections.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub from: IntersectionId,
    pub to: IntersectionId,
    pub length_m: f64,
    /// Geometry from `from` to `to`, at least the two endpoints.
    pub polyline: Vec<LatLon>,
}

/// A directed road graph. One-way streets are pairs present in only one
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    intersections: BTreeMap<IntersectionId, LatLon>,
    segments: BTreeMap<(IntersectionId, IntersectionId), Segment>,
    outgoing: BTreeMap<IntersectionId, Vec<IntersectionId>>,
    incoming: BTreeMap<IntersectionId, Vec<IntersectionId>>,
}

impl RoadGraph {
    pub fn new(
        intersections: BTreeMap<IntersectionId, LatLon>,
        segments: Vec<Segment>,
    ) -> Result<Self> {
        let mut seg_map = BTreeMap::new();
        let mut outgoing: BTreeMap<IntersectionId, Vec<IntersectionId>> = BTreeMap::new();
        let mut incoming: BTreeMap<IntersectionId, Vec<IntersectionId>> = BTreeMap::new();
        for seg in segments {
            if seg.from == seg.to {
                return Err(Error::invalid(
                    "graph",
                    format!("self-loop segment at {}", seg.from),
                ));
            }
            let (a, b) = (seg.from, seg.to);
            for id in [a, b] {
                if !intersections.contains_key(&id) {
                    return Err(Error::invalid(
                        "graph",
                        format!("segment ({a}, {b}) references unknown intersection {id}"),
                    ));
                }
            }
            if seg.polyline.len() < 2 {
                return Err(Error::invalid(
                    "graph",
                    format!("segment ({a}, {b}) needs at least two polyline points"),
                ));
            }
            let straight = haversine_distance(intersections[&a], intersections[&b]);
            if !(seg.length_m > 0.0) || seg.length_m < straight * (1.0 - 1e-6) {
                return Err(Error::invalid(
                    "graph",
                    format!(
                        "segment ({a}, {b}) length {} shorter than straight-line {straight}",
                        seg.length_m
                    ),
                ));
            }
            if seg_map.insert((a, b), seg).is_some() {
                return Err(Error::invalid("graph", format!("duplicate segment ({a}, {b})")));
            }
            outgoing.entry(a).or_default().push(b);
            incoming.entry(b).or_default().push(a);
        }
        for list in outgoing.values_mut().chain(incoming.values_mut()) {
            list.sort();
        }
        Ok(RoadGraph {
            intersections,
            segments: seg_map,
            outgoing,
            incoming,
        })
    }

    pub fn intersections(&self) -> &BTreeMap<IntersectionId, LatLon> {
        &self.intersections
    }

    pub fn position(&self, id: IntersectionId) -> Option<LatLon> {
        self.intersections.get(&id).copied()
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.values()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment(&self, from: IntersectionId, to: IntersectionId) -> Option<&Segment> {
        self.segments.get(&(from, to))
    }

    pub fn has_segment(&self, from: IntersectionId, to: IntersectionId) -> bool {
        self.segments.contains_key(&(from, to))
    }

    /// Intersections reachable by one segment from `id`, ascending.
    pub fn successors(&self, id: IntersectionId) -> &[IntersectionId] {
        self.outgoing.get(&id).map_or(&[], |v| v.as_slice())
    }

    /// Intersections with a segment into `id`, ascending.
    pub fn predecessors(&self, id: IntersectionId) -> &[IntersectionId] {
        self.incoming.get(&id).map_or(&[], |v| v.as_slice())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file: GraphFile = self.into();
        let mut text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Json {
                path: path.display().to_string(),
                source: e,
            })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let file: GraphFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.display().to_string(),
            source: e,
        })?;
        file.try_into()
    }
}

/// JSON schema: `intersections` maps id to lat/lon, `segments` is a list of
/// `[from, to, length_m, polyline]`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    intersections: BTreeMap<String, LatLon>,
    segments: Vec<(u32, u32, f64, Vec<(f64, f64)>)>,
}

impl From<&RoadGraph> for GraphFile {
    fn from(g: &RoadGraph) -> Self {
        GraphFile {
            intersections: g
                .intersections
                .iter()
                .map(|(id, p)| (id.to_string(), *p))
                .collect(),
            segments: g
                .segments
                .values()
                .map(|s| {
                    (
                        s.from.0,
                        s.to.0,
                        s.length_m,
                        s.polyline.iter().map(|p| (p.lat, p.lon)).collect(),
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<GraphFile> for RoadGraph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        let mut intersections = BTreeMap::new();
        for (key, p) in file.intersections {
            let id: u32 = key
                .parse()
                .map_err(|_| Error::Schema(format!("bad intersection id {key:?}")))?;
            LatLon::new(p.lat, p.lon)?;
            intersections.insert(IntersectionId(id), p);
        }
        let segments = file
            .segments
            .into_iter()
            .map(|(from, to, length_m, poly)| {
                let polyline = poly
                    .into_iter()
                    .map(|(lat, lon)| LatLon::new(lat, lon))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Segment {
                    from: IntersectionId(from),
                    to: IntersectionId(to),
                    length_m,
                    polyline,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RoadGraph::new(intersections, segments)
    }
}

/// An ordered intersection sequence. Adjacency against a specific graph is
/// checked by [`validate_route`]; the type itself permits revisits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Route(Vec<IntersectionId>);

impl Route {
    pub fn new(intersections: Vec<IntersectionId>) -> Result<Self> {
        if intersections.len() < 2 {
            return Err(Error::invalid(
                "route",
                "a route needs at least two intersections",
            ));
        }
        Ok(Route(intersections))
    }

    /// Parses the `8-5-6-7` hyphen notation.
    pub fn parse(text: &str) -> Result<Self> {
        let ids = text
            .split(['-', ','])
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map(IntersectionId)
                    .map_err(|_| Error::Schema(format!("bad intersection id {tok:?} in route")))
            })
            .collect::<Result<Vec<_>>>()?;
        Route::new(ids)
    }

    pub fn intersections(&self) -> &[IntersectionId] {
        &self.0
    }

    pub fn len_segments(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first(&self) -> IntersectionId {
        self.0[0]
    }

    pub fn last(&self) -> IntersectionId {
        *self.0.last().unwrap()
    }

    /// Consecutive (from, to) pairs.
    pub fn segment_pairs(&self) -> impl Iterator<Item = (IntersectionId, IntersectionId)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    /// Final (from, to) pair; the destination road segment.
    pub fn last_segment(&self) -> (IntersectionId, IntersectionId) {
        (self.0[self.0.len() - 2], self.0[self.0.len() - 1])
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for id in &self.0 {
            if !first {
                write!(f, "-")?;
            }
            write!(f, "{id}")?;
            first = false;
        }
        Ok(())
    }
}

/// A route together with the time at which each segment traversal ended,
/// relative to the start of the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedRoute {
    pub route: Route,
    /// One boundary per traversed segment, strictly increasing; the implied
    /// start time is zero.
    pub boundary_times: Vec<f64>,
}

impl TimedRoute {
    pub fn new(route: Route, boundary_times: Vec<f64>) -> Result<Self> {
        if boundary_times.len() != route.len_segments() {
            return Err(Error::invalid(
                "timed route",
                format!(
                    "{} boundary times for {} segments",
                    boundary_times.len(),
                    route.len_segments()
                ),
            ));
        }
        let mut prev = 0.0;
        for &t in &boundary_times {
            if !(t > prev) {
                return Err(Error::invalid(
                    "timed route",
                    format!("boundary times must be strictly increasing, got {t} after {prev}"),
                ));
            }
            prev = t;
        }
        Ok(TimedRoute {
            route,
            boundary_times,
        })
    }
}

/// Checks that every consecutive pair of `route` is a directed segment of
/// `graph`; reports the first missing pair.
pub fn validate_route(graph: &RoadGraph, route: &Route) -> Result<()> {
    for (index, (from, to)) in route.segment_pairs().enumerate() {
        if !graph.has_segment(from, to) {
            return Err(Error::RouteViolation { index, from, to });
        }
    }
    Ok(())
}

/// Every feasible hysteresis triple (x, y, z): both (x,y) and (y,z) are
/// segments and z is not an immediate backtrack to x.
pub fn feasible_triples(
    graph: &RoadGraph,
) -> BTreeSet<(IntersectionId, IntersectionId, IntersectionId)> {
    let mut triples = BTreeSet::new();
    for seg in graph.segments() {
        let (x, y) = (seg.from, seg.to);
        for &z in graph.successors(y) {
            if z != x {
                triples.insert((x, y, z));
            }
        }
    }
    triples
}
