//! The particle filter: per-iteration extension, DTW weighting, and
//! systematic resampling of route hypotheses.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{PowerTrace, TripleKey};

use super::{segment_likelihood_weight, HmmModel, RouteHypothesis};

/// One filter iteration. Every live hypothesis samples a continuation from
/// the transition distribution, is weighted by the minimal DTW cost of the
/// new segment against the observation, and advances its end time by the
/// winning duration; hypotheses whose remaining observation cannot fit the
/// segment's minimal duration are marked exhausted and pass through
/// unchanged. The whole population is then resampled with replacement
/// according to the weights (costs inverted through a softmax at a
/// median-cost temperature). Returns true once every input hypothesis was
/// already exhausted, in which case the input is returned unchanged.
pub fn pf_iterate(
    particles: Vec<RouteHypothesis>,
    observation: &PowerTrace,
    model: &HmmModel,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<RouteHypothesis>, bool)> {
    if particles.is_empty() {
        return Err(Error::EmptyInput("particle set"));
    }
    if particles.iter().all(|p| p.exhausted) {
        return Ok((particles, true));
    }

    // Sequential sampling of continuations keeps the RNG stream independent
    // of evaluation parallelism.
    let mut chosen: Vec<Option<TripleKey>> = Vec::with_capacity(particles.len());
    for p in &particles {
        if p.exhausted {
            chosen.push(None);
            continue;
        }
        let (x, y) = p.last_state();
        let continuations = model.continuations(x, y);
        if continuations.is_empty() {
            // Dead end: the formula's continuation set is empty.
            chosen.push(None);
        } else {
            let z = continuations[rng.random_range(0..continuations.len())];
            chosen.push(Some((x, y, z)));
        }
    }

    // Many particles request the same (time, triple) evaluation; compute
    // each distinct one once, in parallel.
    let mut requests: BTreeMap<(u64, TripleKey), ()> = BTreeMap::new();
    for (p, c) in particles.iter().zip(&chosen) {
        if let Some(triple) = c {
            requests.insert((p.end_time.to_bits(), *triple), ());
        }
    }
    let keys: Vec<(u64, TripleKey)> = requests.keys().copied().collect();
    let evaluated: Vec<Option<(f64, f64)>> = keys
        .par_iter()
        .map(|&(t_bits, triple)| {
            segment_likelihood_weight(observation, f64::from_bits(t_bits), triple, model)
        })
        .collect::<Result<Vec<_>>>()?;
    let results: BTreeMap<(u64, TripleKey), Option<(f64, f64)>> =
        keys.into_iter().zip(evaluated).collect();

    let mut extended = Vec::with_capacity(particles.len());
    for (mut p, c) in particles.into_iter().zip(chosen) {
        match c {
            None => {
                p.exhausted = true;
            }
            Some(triple) => {
                match results[&(p.end_time.to_bits(), triple)] {
                    None => p.exhausted = true,
                    Some((cost, duration)) => {
                        p.nodes.push(triple.2);
                        p.end_time += duration;
                        p.boundary_times.push(p.end_time);
                        p.weight = cost;
                    }
                }
            }
        }
        extended.push(p);
    }

    // Costs to resampling probabilities: softmax of the negated cost at a
    // temperature set by the median cost, which makes the inversion
    // scale-robust. Shifting by the minimum only stabilizes the exponent.
    let mut costs: Vec<f64> = extended.iter().map(|p| p.weight).collect();
    let mut sorted = costs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let temperature = median.max(1e-12);
    let min_cost = sorted[0];
    for c in &mut costs {
        *c = (-(*c - min_cost) / temperature).exp();
    }
    let total: f64 = costs.iter().sum();
    let probs: Vec<f64> = costs.iter().map(|c| c / total).collect();

    let resampled = systematic_resample(&extended, &probs, rng);
    Ok((resampled, false))
}

/// Low-variance systematic resampling; population size is preserved and
/// repetitions are expected.
fn systematic_resample(
    particles: &[RouteHypothesis],
    probs: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<RouteHypothesis> {
    let n = particles.len();
    let step = 1.0 / n as f64;
    let start: f64 = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    let mut cumulative = probs[0];
    for k in 0..n {
        let u = start + k as f64 * step;
        while i + 1 < n && cumulative < u {
            i += 1;
            cumulative += probs[i];
        }
        out.push(particles[i].clone());
    }
    out
}

/// Runs the full filter: initializes N hypotheses from the initial context
/// distribution, iterates until every hypothesis has exhausted the
/// observation or the iteration cap is reached, and returns the final
/// population (size N, repetitions included). Reproducible per seed.
pub fn run_particle_filter(
    observation: &PowerTrace,
    model: &HmmModel,
    n_particles: usize,
    max_iterations: Option<usize>,
    seed: u64,
) -> Result<Vec<RouteHypothesis>> {
    if n_particles == 0 {
        return Err(Error::invalid("particle filter", "need at least 1 particle"));
    }
    let t_max = observation.duration();

    // Admissible contexts: at least one continuation whose segment can fit
    // in the observation at time zero.
    let contexts: Vec<_> = model
        .initial_contexts()
        .iter()
        .copied()
        .filter(|&w| {
            model.continuations(w, model.start).iter().any(|&z| {
                model
                    .delta_bounds(model.start, z)
                    .is_some_and(|(lo, _)| lo <= t_max)
            })
        })
        .collect();
    if contexts.is_empty() {
        return Err(Error::Mismatch(format!(
            "no admissible first segment from {} fits the {t_max:.1} s observation",
            model.start
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut particles: Vec<RouteHypothesis> = (0..n_particles)
        .map(|_| {
            let context = contexts[rng.random_range(0..contexts.len())];
            RouteHypothesis {
                context,
                nodes: vec![model.start],
                boundary_times: Vec::new(),
                weight: 0.0,
                end_time: 0.0,
                exhausted: false,
            }
        })
        .collect();

    let cap = max_iterations.unwrap_or_else(|| {
        let min_delta = model.min_delta();
        if min_delta.is_finite() && min_delta > 0.0 {
            (t_max / min_delta).ceil() as usize
        } else {
            1
        }
    });

    for _ in 0..cap {
        let (next, done) = pf_iterate(particles, observation, model, &mut rng)?;
        particles = next;
        if done {
            break;
        }
    }
    Ok(particles)
}
