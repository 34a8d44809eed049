//! Scoring: destination localization, random feasible-route baselines,
//! tracking-error statistics, and the route-inference report matching the
//! random | frequent | vote | combined table layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{levenshtein_routes, EvalReport, MetricRow};
use crate::model::{haversine_distance, IntersectionId, LatLon, RoadGraph, Route};

/// True when both routes end on the same directed road segment (the final
/// intersection pair, not just the final intersection).
pub fn destination_hit(estimate: &Route, truth: &Route) -> bool {
    estimate.last_segment() == truth.last_segment()
}

/// Monte Carlo scores of a random, albeit feasible, route estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineStats {
    pub destination_rate: f64,
    pub mean_normalized_distance: f64,
    pub exact_fit_rate: f64,
    pub trials: usize,
}

/// Samples `trials` random feasible routes matching the truth's start and
/// segment count under the same transition rule as the inference model
/// (uniform continuations, no immediate backtrack, hysteresis context drawn
/// uniformly over entering segments) and scores them against the truth.
pub fn random_route_baseline(
    graph: &RoadGraph,
    truth: &Route,
    trials: usize,
    seed: u64,
) -> Result<BaselineStats> {
    if trials == 0 {
        return Err(Error::invalid("baseline", "need at least one trial"));
    }
    let start = truth.first();
    let length = truth.len_segments();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut destination = 0usize;
    let mut exact = 0usize;
    let mut distance_sum = 0.0;
    for _ in 0..trials {
        let candidate = sample_feasible_route(graph, start, length, &mut rng)?;
        if destination_hit(&candidate, truth) {
            destination += 1;
        }
        let (raw, norm) = levenshtein_routes(&candidate, truth);
        if raw == 0 {
            exact += 1;
        }
        distance_sum += norm;
    }
    Ok(BaselineStats {
        destination_rate: destination as f64 / trials as f64,
        mean_normalized_distance: distance_sum / trials as f64,
        exact_fit_rate: exact as f64 / trials as f64,
        trials,
    })
}

/// One random feasible route of up to `length` segments from `start`;
/// shorter only when a dead end cuts it off.
fn sample_feasible_route(
    graph: &RoadGraph,
    start: IntersectionId,
    length: usize,
    rng: &mut impl Rng,
) -> Result<Route> {
    let preds = graph.predecessors(start);
    let mut prev = if preds.is_empty() {
        None
    } else {
        Some(preds[rng.random_range(0..preds.len())])
    };
    let mut nodes = vec![start];
    for _ in 0..length {
        let here = *nodes.last().unwrap();
        let continuations: Vec<IntersectionId> = graph
            .successors(here)
            .iter()
            .copied()
            .filter(|&z| Some(z) != prev)
            .collect();
        if continuations.is_empty() {
            break;
        }
        let z = continuations[rng.random_range(0..continuations.len())];
        prev = Some(here);
        nodes.push(z);
    }
    Route::new(nodes)
}

/// Tracking-error statistics over an aligned estimate/truth series.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub errors_m: Vec<f64>,
    pub bound_m: f64,
    /// Fraction of all ticks with error below the bound.
    pub fraction_below: f64,
    /// First tick index from which `dwell` consecutive errors stay below
    /// the bound.
    pub convergence_tick: Option<usize>,
}

impl TrackingReport {
    /// Fraction of ticks below the bound from `tick` onward.
    pub fn fraction_below_from(&self, tick: usize) -> f64 {
        let tail = &self.errors_m[tick.min(self.errors_m.len())..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|&&e| e < self.bound_m).count() as f64 / tail.len() as f64
    }

    /// Empirical CDF as (error, cumulative fraction) steps.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let mut sorted = self.errors_m.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, (i + 1) as f64 / n))
            .collect()
    }

    pub fn median_error(&self) -> f64 {
        let mut sorted = self.errors_m.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[sorted.len() / 2]
    }

    /// Rows plus error-vs-tick and CDF series.
    pub fn to_report(&self, scenario: &str, times_s: &[f64]) -> EvalReport {
        let n = self.errors_m.len();
        let rows = vec![
            MetricRow {
                name: "fraction_below_bound".into(),
                value: self.fraction_below,
                baseline: None,
                n,
            },
            MetricRow {
                name: "median_error_m".into(),
                value: self.median_error(),
                baseline: None,
                n,
            },
            MetricRow {
                name: "convergence_tick".into(),
                value: self.convergence_tick.map(|t| t as f64).unwrap_or(-1.0),
                baseline: None,
                n,
            },
        ];
        let error_series: Vec<(f64, f64)> = times_s
            .iter()
            .zip(&self.errors_m)
            .map(|(&t, &e)| (t, e))
            .collect();
        EvalReport {
            scenario: scenario.into(),
            rows,
            series: vec![
                ("error_vs_time".into(), error_series),
                ("error_cdf".into(), self.cdf()),
            ],
        }
    }
}

/// Per-tick errors between aligned estimate and truth positions, with the
/// below-bound fraction and the convergence tick (first index from which
/// `dwell` consecutive errors stay below the bound).
pub fn tracking_error_report(
    estimates: &[LatLon],
    truth: &[LatLon],
    bound_m: f64,
    dwell: usize,
) -> Result<TrackingReport> {
    if estimates.len() != truth.len() {
        return Err(Error::Mismatch(format!(
            "estimate series length {} != truth length {}",
            estimates.len(),
            truth.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::EmptyInput("tracking series"));
    }
    let errors_m: Vec<f64> = estimates
        .iter()
        .zip(truth)
        .map(|(&e, &t)| haversine_distance(e, t))
        .collect();
    let below = errors_m.iter().filter(|&&e| e < bound_m).count();
    let dwell = dwell.max(1);
    let convergence_tick = (0..errors_m.len().saturating_sub(dwell - 1))
        .find(|&i| errors_m[i..i + dwell].iter().all(|&e| e < bound_m));
    Ok(TrackingReport {
        fraction_below: below as f64 / errors_m.len() as f64,
        errors_m,
        bound_m,
        convergence_tick,
    })
}

/// Decoded estimates for one ground-truth track.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOutcome {
    pub truth: Route,
    pub frequent: Route,
    pub vote: Route,
}

/// Scores a batch of route-inference outcomes: destination rate, mean
/// normalized edit distance, and exact-fit rate for each decoder, for the
/// per-track best of the two ("combined"), and for the random feasible
/// baseline (`trials` Monte Carlo routes per track).
pub fn route_inference_report(
    outcomes: &[InferenceOutcome],
    graph: &RoadGraph,
    trials: usize,
    seed: u64,
) -> Result<EvalReport> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("inference outcomes"));
    }
    let n = outcomes.len();
    let mut dest = [0.0f64; 3]; // frequent, vote, combined
    let mut dist = [0.0f64; 3];
    let mut exact = [0.0f64; 3];
    for o in outcomes {
        let fd = destination_hit(&o.frequent, &o.truth);
        let vd = destination_hit(&o.vote, &o.truth);
        let (fraw, fnorm) = levenshtein_routes(&o.frequent, &o.truth);
        let (vraw, vnorm) = levenshtein_routes(&o.vote, &o.truth);
        dest[0] += f64::from(u8::from(fd));
        dest[1] += f64::from(u8::from(vd));
        dest[2] += f64::from(u8::from(fd || vd));
        dist[0] += fnorm;
        dist[1] += vnorm;
        dist[2] += fnorm.min(vnorm);
        exact[0] += f64::from(u8::from(fraw == 0));
        exact[1] += f64::from(u8::from(vraw == 0));
        exact[2] += f64::from(u8::from(fraw == 0 || vraw == 0));
    }

    // Random baseline, one Monte Carlo batch per track.
    let mut base = BaselineStats {
        destination_rate: 0.0,
        mean_normalized_distance: 0.0,
        exact_fit_rate: 0.0,
        trials,
    };
    for (i, o) in outcomes.iter().enumerate() {
        let b = random_route_baseline(graph, &o.truth, trials, seed.wrapping_add(i as u64))?;
        base.destination_rate += b.destination_rate;
        base.mean_normalized_distance += b.mean_normalized_distance;
        base.exact_fit_rate += b.exact_fit_rate;
    }
    base.destination_rate /= n as f64;
    base.mean_normalized_distance /= n as f64;
    base.exact_fit_rate /= n as f64;

    let nf = n as f64;
    let mut rows = Vec::new();
    let decoders = ["frequent", "vote", "combined"];
    for (metric, values, baseline) in [
        ("destination_rate", &dest, base.destination_rate),
        (
            "mean_normalized_distance",
            &dist,
            base.mean_normalized_distance,
        ),
        ("exact_fit_rate", &exact, base.exact_fit_rate),
    ] {
        rows.push(MetricRow {
            name: format!("{metric}/random"),
            value: baseline,
            baseline: None,
            n,
        });
        for (d, v) in decoders.iter().zip(values.iter()) {
            rows.push(MetricRow {
                name: format!("{metric}/{d}"),
                value: v / nf,
                baseline: Some(baseline),
                n,
            });
        }
    }
    Ok(EvalReport {
        scenario: "route_inference".into(),
        rows,
        series: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::fixtures;

    fn route(spec: &str) -> Route {
        Route::parse(spec).unwrap()
    }

    #[test]
    fn destination_compares_segments_not_points() {
        assert!(destination_hit(&route("1-2-3"), &route("1-2-3")));
        assert!(destination_hit(&route("9-2-3"), &route("1-2-3")));
        // Same final intersection, different penultimate: a miss.
        assert!(!destination_hit(&route("1-4-3"), &route("1-2-3")));
    }

    #[test]
    fn baseline_on_single_path_graph_is_perfect() {
        // Graph 1 -> 2 -> 3 one-way: only one feasible 2-segment route.
        let frame =
            crate::model::LocalFrame::new(crate::model::LatLon::new(37.0, -122.0).unwrap());
        let mut nodes = std::collections::BTreeMap::new();
        for (id, x) in [(1u32, 0.0), (2, 400.0), (3, 800.0)] {
            nodes.insert(IntersectionId(id), frame.to_latlon(x, 0.0));
        }
        let seg = |a: u32, b: u32| crate::model::Segment {
            from: IntersectionId(a),
            to: IntersectionId(b),
            length_m: haversine_distance(nodes[&IntersectionId(a)], nodes[&IntersectionId(b)]),
            polyline: vec![nodes[&IntersectionId(a)], nodes[&IntersectionId(b)]],
        };
        let graph = RoadGraph::new(nodes.clone(), vec![seg(1, 2), seg(2, 3)]).unwrap();
        let stats = random_route_baseline(&graph, &route("1-2-3"), 100, 1).unwrap();
        assert_eq!(stats.destination_rate, 1.0);
        assert_eq!(stats.exact_fit_rate, 1.0);
        assert_eq!(stats.mean_normalized_distance, 0.0);
    }

    #[test]
    fn baseline_reproducible_per_seed() {
        let (_, graph) = fixtures::grid13();
        let truth = route("8-5-6-7");
        let a = random_route_baseline(&graph, &truth, 500, 9).unwrap();
        let b = random_route_baseline(&graph, &truth, 500, 9).unwrap();
        assert_eq!(a, b);
        let c = random_route_baseline(&graph, &truth, 500, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tracking_report_zero_errors() {
        let p = crate::model::LatLon::new(37.0, -122.0).unwrap();
        let series = vec![p; 5];
        let report = tracking_error_report(&series, &series, 100.0, 2).unwrap();
        assert_eq!(report.errors_m, vec![0.0; 5]);
        assert_eq!(report.fraction_below, 1.0);
        assert_eq!(report.convergence_tick, Some(0));
        let cdf = report.cdf();
        assert_eq!(cdf.last().unwrap().1, 1.0);
        assert_eq!(cdf[0].0, 0.0);
    }

    #[test]
    fn fraction_below_matches_direct_count() {
        let base = crate::model::LatLon::new(37.0, -122.0).unwrap();
        let truth = vec![base; 4];
        let offsets = [0.0, 0.001, 0.0001, 0.01]; // degrees latitude
        let estimates: Vec<_> = offsets
            .iter()
            .map(|d| crate::model::LatLon::new(37.0 + d, -122.0).unwrap())
            .collect();
        let bound = 50.0;
        let report = tracking_error_report(&estimates, &truth, bound, 1).unwrap();
        let direct =
            report.errors_m.iter().filter(|&&e| e < bound).count() as f64 / 4.0;
        assert_eq!(report.fraction_below, direct);
    }

    #[test]
    fn tracking_report_rejects_mismatched_lengths() {
        let p = crate::model::LatLon::new(37.0, -122.0).unwrap();
        assert!(tracking_error_report(&[p, p], &[p], 1.0, 1).is_err());
    }

    #[test]
    fn convergence_requires_dwell() {
        let mk = |d: f64| crate::model::LatLon::new(37.0 + d, -122.0).unwrap();
        let truth = vec![mk(0.0); 6];
        // Errors: big, small, big, small, small, small. Dwell 3 converges
        // at tick 3.
        let estimates = vec![mk(0.01), mk(0.0), mk(0.01), mk(0.0), mk(0.0), mk(0.0)];
        let report = tracking_error_report(&estimates, &truth, 50.0, 3).unwrap();
        assert_eq!(report.convergence_tick, Some(3));
    }

    #[test]
    fn combined_rows_dominate_individuals() {
        let outcomes = vec![
            InferenceOutcome {
                truth: route("1-2-3-4"),
                frequent: route("1-2-3-4"),
                vote: route("1-2-4"),
            },
            InferenceOutcome {
                truth: route("8-5-6-7"),
                frequent: route("8-5-4-3"),
                vote: route("8-5-6-7"),
            },
        ];
        let (_, graph) = fixtures::grid13();
        let report = route_inference_report(&outcomes, &graph, 50, 3).unwrap();
        let get = |name: &str| {
            report
                .rows
                .iter()
                .find(|r| r.name == name)
                .unwrap_or_else(|| panic!("row {name}"))
                .value
        };
        assert!(get("destination_rate/combined") >= get("destination_rate/frequent"));
        assert!(get("destination_rate/combined") >= get("destination_rate/vote"));
        assert!(get("exact_fit_rate/combined") >= get("exact_fit_rate/frequent"));
        assert!(
            get("mean_normalized_distance/combined")
                <= get("mean_normalized_distance/frequent")
        );
        assert!(get("mean_normalized_distance/combined") <= get("mean_normalized_distance/vote"));
        assert_eq!(get("destination_rate/combined"), 1.0);
        assert_eq!(get("exact_fit_rate/combined"), 1.0);
    }

    #[test]
    fn all_exact_estimates_score_perfectly() {
        let truth = route("1-2-3-4");
        let outcomes = vec![
            InferenceOutcome {
                truth: truth.clone(),
                frequent: truth.clone(),
                vote: truth.clone(),
            };
            3
        ];
        let (_, graph) = fixtures::grid13();
        let report = route_inference_report(&outcomes, &graph, 20, 1).unwrap();
        let get = |name: &str| report.rows.iter().find(|r| r.name == name).unwrap().value;
        assert_eq!(get("destination_rate/frequent"), 1.0);
        assert_eq!(get("mean_normalized_distance/vote"), 0.0);
        assert_eq!(get("exact_fit_rate/combined"), 1.0);
    }
}
