//! Real-time tracking along known routes: the accumulated power profile is
//! matched as a subsequence of each reference profile and the best match's
//! end offset yields the position. A lock-state motion model can veto
//! implausible jumps between consecutive estimates.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{haversine_distance, LatLon, PowerTrace, ReferenceLibrary};
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::similarity::{default_jump_cost, subsequence_dtw, subsequence_osb};

/// Subsequence matcher backing the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Dtw,
    Osb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    pub preprocess: PreprocessConfig,
    /// Lock threshold on the similarity score `1 / (1 + distance)`.
    pub threshold: f64,
    /// Seconds of new samples per update tick.
    pub update_interval_s: f64,
    /// Maximum plausible speed; bounds per-tick displacement while locked.
    pub max_speed_mps: f64,
    /// Explicit displacement bound; when unset,
    /// `1.5 * update_interval_s * max_speed_mps`.
    pub max_disp_m: Option<f64>,
    pub matcher: Matcher,
    pub motion_model: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            preprocess: PreprocessConfig::default(),
            threshold: 0.6,
            update_interval_s: 3.0,
            max_speed_mps: 35.0,
            max_disp_m: None,
            matcher: Matcher::Dtw,
            motion_model: true,
        }
    }
}

impl TrackerConfig {
    pub fn max_disp(&self) -> f64 {
        self.max_disp_m
            .unwrap_or(1.5 * self.update_interval_s * self.max_speed_mps)
    }
}

/// One location estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingEstimate {
    pub route_label: String,
    /// Index into the preprocessed reference the position was read from.
    pub end_offset: usize,
    pub position: LatLon,
    /// `1 / (1 + normalized distance)`; higher is more similar.
    pub score: f64,
    /// True when the motion model replaced the raw estimate with the
    /// previous one.
    pub corrected: bool,
}

/// Mutable tracker state across ticks.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub locked: bool,
    pub last_estimate: Option<TrackingEstimate>,
    pub threshold: f64,
    pub max_disp_m: f64,
    /// Consecutive vetoes since the last accepted estimate. The displacement
    /// allowance grows with it: after k vetoed ticks the target may
    /// legitimately be k+1 intervals away from the last trusted fix.
    pub veto_streak: usize,
    pub history: Vec<TrackingEstimate>,
}

impl TrackerState {
    pub fn new(cfg: &TrackerConfig) -> Self {
        TrackerState {
            locked: false,
            last_estimate: None,
            threshold: cfg.threshold,
            max_disp_m: cfg.max_disp(),
            veto_streak: 0,
            history: Vec::new(),
        }
    }
}

/// Reference profiles preprocessed once, with the per-sample coordinates
/// that survive the downsampling index mapping.
#[derive(Debug, Clone)]
pub struct PreparedTrack {
    refs: Vec<(String, Vec<f64>, Vec<LatLon>)>,
}

impl PreparedTrack {
    pub fn from_library(library: &ReferenceLibrary, cfg: &PreprocessConfig) -> Result<Self> {
        if library.entries.is_empty() {
            return Err(Error::EmptyInput("tracking library has no routes"));
        }
        cfg.validate()?;
        let mut refs = Vec::new();
        for (label, traces) in &library.entries {
            for trace in traces {
                if trace.ground_truth().is_none() {
                    return Err(Error::invalid(
                        "tracking reference",
                        format!("route {label:?} has a recording without coordinates"),
                    ));
                }
                let prepped = preprocess(trace, cfg);
                let coords = prepped
                    .ground_truth()
                    .expect("preprocessing preserves ground truth")
                    .to_vec();
                refs.push((label.clone(), prepped.samples().to_vec(), coords));
            }
        }
        Ok(PreparedTrack { refs })
    }
}

/// Matches `accumulated` against every reference and returns the location
/// associated with the best match's end offset.
pub fn estimate_location(
    accumulated: &PowerTrace,
    library: &ReferenceLibrary,
    cfg: &TrackerConfig,
) -> Result<TrackingEstimate> {
    let prepared = PreparedTrack::from_library(library, &cfg.preprocess)?;
    estimate_prepared(accumulated, &prepared, cfg)
}

/// As [`estimate_location`] with references prepared up front.
pub fn estimate_prepared(
    accumulated: &PowerTrace,
    prepared: &PreparedTrack,
    cfg: &TrackerConfig,
) -> Result<TrackingEstimate> {
    if accumulated.is_empty() {
        return Err(Error::EmptyInput("accumulated samples"));
    }
    let query = preprocess(accumulated, &cfg.preprocess);
    let q = query.samples();

    // (normalized distance, ref index, end offset); reduced sequentially.
    let matches: Vec<(f64, usize, Option<usize>)> = prepared
        .refs
        .par_iter()
        .enumerate()
        .map(|(idx, (_, samples, _))| {
            let alignment = match cfg.matcher {
                Matcher::Dtw => subsequence_dtw(q, samples)?,
                Matcher::Osb => {
                    let jc = default_jump_cost(q, samples);
                    subsequence_osb(q, samples, jc)?
                }
            };
            Ok((alignment.normalized_distance(), idx, alignment.end_offset))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(f64, usize, Option<usize>)> = None;
    for m in matches {
        let better = match &best {
            None => true,
            Some(b) => {
                m.0 < b.0 || (m.0 == b.0 && (prepared.refs[m.1].0.as_str(), m.1) < (prepared.refs[b.1].0.as_str(), b.1))
            }
        };
        if better {
            best = Some(m);
        }
    }
    let (dist, idx, end) = best.expect("at least one reference");
    let (label, _, coords) = &prepared.refs[idx];
    // An OSB alignment that matched nothing carries no offset; report the
    // reference start with zero confidence rather than failing the stream.
    let end_offset = end.unwrap_or(0).min(coords.len() - 1);
    let score = if dist.is_finite() { 1.0 / (1.0 + dist) } else { 0.0 };
    Ok(TrackingEstimate {
        route_label: label.clone(),
        end_offset,
        position: coords[end_offset],
        score,
        corrected: false,
    })
}

/// One tracking step with the lock-state motion model: compute the raw
/// estimate; while locked, a displacement beyond the bound reuses the
/// previous estimate; afterwards the lock flag is set from the score
/// threshold, in that order.
pub fn step_with_motion_model(
    state: &mut TrackerState,
    accumulated: &PowerTrace,
    prepared: &PreparedTrack,
    cfg: &TrackerConfig,
) -> Result<TrackingEstimate> {
    let raw = estimate_prepared(accumulated, prepared, cfg)?;
    let mut output = raw.clone();
    if state.locked {
        if let Some(last) = &state.last_estimate {
            let displacement = haversine_distance(raw.position, last.position);
            let allowance = state.max_disp_m * (state.veto_streak + 1) as f64;
            if displacement > allowance {
                output = TrackingEstimate {
                    route_label: last.route_label.clone(),
                    end_offset: last.end_offset,
                    position: last.position,
                    score: raw.score,
                    corrected: true,
                };
            }
        }
    }
    state.veto_streak = if output.corrected {
        state.veto_streak + 1
    } else {
        0
    };
    state.locked = raw.score > state.threshold;
    state.last_estimate = Some(output.clone());
    state.history.push(output.clone());
    Ok(output)
}

/// One per-tick row of a tracking run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackTick {
    /// End time of the tick's accumulated window.
    pub t_s: f64,
    pub estimate: TrackingEstimate,
    /// Distance to ground truth at the tick, when the stream carries it.
    pub error_m: Option<f64>,
}

/// Feeds `stream` to the tracker one update interval at a time, as if the
/// samples arrived live, and reports every estimate with its error where
/// ground truth is available.
pub fn run_tracking(
    stream: &PowerTrace,
    library: &ReferenceLibrary,
    cfg: &TrackerConfig,
) -> Result<Vec<TrackTick>> {
    let prepared = PreparedTrack::from_library(library, &cfg.preprocess)?;
    let period = stream.sample_period();
    let step = ((cfg.update_interval_s / period).round() as usize).max(1);
    let mut state = TrackerState::new(cfg);
    let mut ticks = Vec::new();
    let mut end = step;
    while end <= stream.len() {
        let window = PowerTrace::from_processed(
            period,
            stream.samples()[..end].to_vec(),
            stream.ground_truth().map(|gt| gt[..end].to_vec()),
        )?;
        let estimate = if cfg.motion_model {
            step_with_motion_model(&mut state, &window, &prepared, cfg)?
        } else {
            estimate_prepared(&window, &prepared, cfg)?
        };
        let error_m = stream
            .ground_truth()
            .map(|gt| haversine_distance(estimate.position, gt[end - 1]));
        ticks.push(TrackTick {
            t_s: end as f64 * period,
            estimate,
            error_m,
        });
        end += step;
    }
    if ticks.is_empty() {
        return Err(Error::invalid(
            "tracking stream",
            "shorter than one update interval",
        ));
    }
    Ok(ticks)
}
