//! Unseen-route inference over a road graph: a hidden Markov model whose
//! states are directed road segments, solved with a particle filter over
//! per-segment power profiles, plus two decoders for the final particle set.
//!
//! The observation distribution has no explicit parametric form; the
//! likelihood of a profile slice against a candidate segment is realized
//! operationally as the minimal normalized DTW distance to the segment's
//! prerecorded profiles (smaller cost, higher likelihood).

mod decode;
mod filter;

pub use decode::{estimate_pair, iterative_majority_vote, most_frequent_route};
pub use filter::{pf_iterate, run_particle_filter};

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    slice_trace, IntersectionId, PowerTrace, ReferenceLibrary, RoadGraph, Route, TimedRoute,
    TripleKey,
};
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::similarity::normalized_dtw;

/// Tuning knobs for model construction and filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceConfig {
    pub preprocess: PreprocessConfig,
    /// Discrete time resolution of the duration search grid, seconds.
    pub tau_s: f64,
    /// Fractional widening of the observed per-segment duration bounds.
    pub delta_margin: f64,
    pub particles: usize,
    /// Iteration cap; when unset, `ceil(t_max / min segment duration)`.
    pub max_iterations: Option<usize>,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            preprocess: PreprocessConfig::for_route_inference(),
            tau_s: 3.0,
            delta_margin: 0.2,
            particles: 1000,
            max_iterations: None,
        }
    }
}

/// The hidden Markov model: uniform transitions over feasible continuations
/// (no immediate backtrack), an initial distribution over the segments
/// entering the known start intersection, per-segment duration bounds, and
/// the preprocessed segment-profile library realizing the observation
/// likelihood.
#[derive(Debug, Clone)]
pub struct HmmModel {
    pub graph: RoadGraph,
    pub start: IntersectionId,
    /// Feasible continuations per state (x, y): all w with (y, w) a segment
    /// and w != x, each with probability 1 / |list|.
    transitions: BTreeMap<(IntersectionId, IntersectionId), Vec<IntersectionId>>,
    /// Context intersections w: the device traversed (w, start) before the
    /// observation began; uniform. Hysteresis makes this state matter even
    /// though it consumes none of the observation.
    initial: Vec<IntersectionId>,
    /// Preprocessed recordings per (entered-from, from, to) triple.
    segment_refs: BTreeMap<TripleKey, Vec<Vec<f64>>>,
    /// Duration bounds per segment (from, to), widened by the margin.
    delta_bounds: BTreeMap<(IntersectionId, IntersectionId), (f64, f64)>,
    pub tau_s: f64,
    pub preprocess: PreprocessConfig,
}

impl HmmModel {
    /// Transition probability a_xyz; zero for infeasible continuations.
    pub fn transition_prob(
        &self,
        x: IntersectionId,
        y: IntersectionId,
        z: IntersectionId,
    ) -> f64 {
        match self.transitions.get(&(x, y)) {
            Some(list) if list.contains(&z) => 1.0 / list.len() as f64,
            _ => 0.0,
        }
    }

    /// Feasible continuations from state (x, y), ascending.
    pub fn continuations(&self, x: IntersectionId, y: IntersectionId) -> &[IntersectionId] {
        self.transitions.get(&(x, y)).map_or(&[], |v| v.as_slice())
    }

    /// Initial probability of context segment (w, start).
    pub fn initial_prob(&self, w: IntersectionId) -> f64 {
        if self.initial.contains(&w) {
            1.0 / self.initial.len() as f64
        } else {
            0.0
        }
    }

    pub fn initial_contexts(&self) -> &[IntersectionId] {
        &self.initial
    }

    pub fn delta_bounds(&self, from: IntersectionId, to: IntersectionId) -> Option<(f64, f64)> {
        self.delta_bounds.get(&(from, to)).copied()
    }

    /// Smallest lower duration bound over all segments.
    pub fn min_delta(&self) -> f64 {
        self.delta_bounds
            .values()
            .map(|&(lo, _)| lo)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the model for a drive known to start at `start_intersection`:
/// uniform transitions excluding immediate backtrack, uniform initial
/// distribution over context segments entering the start, duration bounds
/// from the observed recording durations widened by the configured margin.
/// Every hysteresis triple reachable from the start must be covered by the
/// segment library.
pub fn build_model(
    graph: &RoadGraph,
    library: &ReferenceLibrary,
    start_intersection: IntersectionId,
    cfg: &InferenceConfig,
) -> Result<HmmModel> {
    if graph.position(start_intersection).is_none() {
        return Err(Error::invalid(
            "start intersection",
            format!("{start_intersection} is not in the graph"),
        ));
    }
    if library.segment_entries.is_empty() {
        return Err(Error::EmptyInput("segment library"));
    }
    cfg.preprocess.validate()?;
    if !(cfg.tau_s > 0.0) || !(cfg.delta_margin >= 0.0) {
        return Err(Error::invalid("inference config", "tau/margin out of range"));
    }

    // Transition table: from state (x, y), every neighbor of y except x.
    let mut transitions = BTreeMap::new();
    for seg in graph.segments() {
        let (x, y) = (seg.from, seg.to);
        let list: Vec<IntersectionId> = graph
            .successors(y)
            .iter()
            .copied()
            .filter(|&w| w != x)
            .collect();
        transitions.insert((x, y), list);
    }

    // The initial state is the segment traversed before the observation
    // started, so it enters the known start intersection.
    let initial: Vec<IntersectionId> = graph.predecessors(start_intersection).to_vec();
    if initial.is_empty() {
        return Err(Error::invalid(
            "start intersection",
            format!("{start_intersection} has no entering segment to carry hysteresis context"),
        ));
    }

    // Coverage check over triples reachable from the start.
    let reachable = reachable_triples(graph, &transitions, &initial, start_intersection);
    let missing: Vec<TripleKey> = reachable
        .iter()
        .copied()
        .filter(|t| !library.segment_entries.contains_key(t))
        .collect();
    if !missing.is_empty() {
        let (x, y, z) = missing[0];
        return Err(Error::UncoveredTriples {
            count: missing.len(),
            first: format!("({x}, {y}, {z})"),
        });
    }

    // Preprocess the recordings once; derive duration bounds per segment.
    let mut segment_refs = BTreeMap::new();
    let mut raw_bounds: BTreeMap<(IntersectionId, IntersectionId), (f64, f64)> = BTreeMap::new();
    for (&(x, y, z), traces) in &library.segment_entries {
        let prepped: Vec<Vec<f64>> = traces
            .iter()
            .map(|t| preprocess(t, &cfg.preprocess).samples().to_vec())
            .collect();
        segment_refs.insert((x, y, z), prepped);
        for t in traces {
            let d = t.duration();
            raw_bounds
                .entry((y, z))
                .and_modify(|(lo, hi)| {
                    *lo = lo.min(d);
                    *hi = hi.max(d);
                })
                .or_insert((d, d));
        }
    }
    let delta_bounds = raw_bounds
        .into_iter()
        .map(|(k, (lo, hi))| {
            (
                k,
                (lo * (1.0 - cfg.delta_margin), hi * (1.0 + cfg.delta_margin)),
            )
        })
        .collect();

    Ok(HmmModel {
        graph: graph.clone(),
        start: start_intersection,
        transitions,
        initial,
        segment_refs,
        delta_bounds,
        tau_s: cfg.tau_s,
        preprocess: cfg.preprocess.clone(),
    })
}

/// Hysteresis triples reachable from the start under the transition rule.
fn reachable_triples(
    graph: &RoadGraph,
    transitions: &BTreeMap<(IntersectionId, IntersectionId), Vec<IntersectionId>>,
    initial: &[IntersectionId],
    start: IntersectionId,
) -> BTreeSet<TripleKey> {
    let mut triples = BTreeSet::new();
    let mut seen: BTreeSet<(IntersectionId, IntersectionId)> = BTreeSet::new();
    let mut queue: VecDeque<(IntersectionId, IntersectionId)> = VecDeque::new();
    for &w in initial {
        if seen.insert((w, start)) {
            queue.push_back((w, start));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        // (x, y) may itself lack a recording: the initial state consumes no
        // observation. Only traversed continuations need profiles.
        if let Some(list) = transitions.get(&(x, y)) {
            for &z in list {
                if graph.has_segment(y, z) {
                    triples.insert((x, y, z));
                    if seen.insert((y, z)) {
                        queue.push_back((y, z));
                    }
                }
            }
        }
    }
    triples
}

/// A particle: one hypothesized timed route plus its latest weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteHypothesis {
    /// Hysteresis context: the device came from this intersection into the
    /// start; not part of the observed route.
    pub context: IntersectionId,
    /// Observed intersections, beginning at the start intersection.
    pub nodes: Vec<IntersectionId>,
    /// End time of each traversed segment.
    pub boundary_times: Vec<f64>,
    /// Cost of the most recently appended segment (smaller is better).
    pub weight: f64,
    pub end_time: f64,
    /// Once set the hypothesis is never extended again.
    pub exhausted: bool,
}

impl RouteHypothesis {
    /// The observed route; `None` before the first extension.
    pub fn route(&self) -> Option<Route> {
        if self.nodes.len() < 2 {
            None
        } else {
            Some(Route::new(self.nodes.clone()).expect("at least two nodes"))
        }
    }

    pub fn timed_route(&self) -> Result<TimedRoute> {
        let route = Route::new(self.nodes.clone())?;
        TimedRoute::new(route, self.boundary_times.clone())
    }

    /// Current state (x, y): the last traversed segment, with the context
    /// standing in before any segment was observed.
    pub fn last_state(&self) -> (IntersectionId, IntersectionId) {
        let n = self.nodes.len();
        if n >= 2 {
            (self.nodes[n - 2], self.nodes[n - 1])
        } else {
            (self.context, self.nodes[0])
        }
    }
}

/// Minimal observation cost of appending segment (y, z) entered from x at
/// time `t_end`: the normalized DTW distance between the preprocessed
/// observation slice and each preprocessed recording of the triple, searched
/// over durations stepped by tau within the segment's bounds and clipped at
/// the observation end. Returns the best (cost, duration), or `None` when
/// even the minimal duration no longer fits (the hypothesis is exhausted).
pub fn segment_likelihood_weight(
    observation: &PowerTrace,
    t_end: f64,
    triple: TripleKey,
    model: &HmmModel,
) -> Result<Option<(f64, f64)>> {
    let (x, y, z) = triple;
    let refs = model
        .segment_refs
        .get(&triple)
        .ok_or_else(|| Error::UncoveredTriples {
            count: 1,
            first: format!("({x}, {y}, {z})"),
        })?;
    let (dmin, dmax) = model
        .delta_bounds
        .get(&(y, z))
        .copied()
        .expect("bounds exist for every covered triple");
    let t_max = observation.duration();
    let remaining = t_max - t_end;
    if dmin > remaining {
        return Ok(None);
    }

    let mut best: Option<(f64, f64)> = None;
    let mut duration = dmin;
    while duration <= dmax + 1e-9 && duration <= remaining + 1e-9 {
        let slice = slice_trace(observation, t_end, (t_end + duration).min(t_max))?;
        let prepped = preprocess(&slice, &model.preprocess);
        for r in refs {
            let cost = normalized_dtw(prepped.samples(), r)?;
            // Strict improvement keeps the smallest duration on ties.
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, duration));
            }
        }
        duration += model.tau_s;
    }
    Ok(best)
}
