//! Route distinguishability: 1-NN classification of a power profile against
//! a labeled reference library under the normalized DTW metric, plus the
//! cross-validation harness that produces identification-rate table rows.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{PowerTrace, ReferenceLibrary};
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::similarity::normalized_dtw;

/// Outcome of classifying one query profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub predicted_label: String,
    /// Minimal normalized DTW distance to each label's references.
    pub per_label_scores: BTreeMap<String, f64>,
    /// Runner-up distance minus winner distance; infinite with one label.
    pub margin: f64,
}

/// References preprocessed once so repeated classifications skip the
/// conditioning pipeline.
#[derive(Debug, Clone)]
pub struct PreparedReferences {
    refs: BTreeMap<String, Vec<Vec<f64>>>,
}

impl PreparedReferences {
    pub fn from_library(library: &ReferenceLibrary, cfg: &PreprocessConfig) -> Result<Self> {
        if library.entries.is_empty() {
            return Err(Error::EmptyInput("reference library has no labeled routes"));
        }
        cfg.validate()?;
        let refs = library
            .entries
            .iter()
            .map(|(label, traces)| {
                let prepped = traces
                    .iter()
                    .map(|t| preprocess(t, cfg).samples().to_vec())
                    .collect();
                (label.clone(), prepped)
            })
            .collect();
        Ok(PreparedReferences { refs })
    }

    pub fn label_count(&self) -> usize {
        self.refs.len()
    }
}

/// Classifies an already-preprocessed query against prepared references.
fn classify_samples(query: &[f64], refs: &PreparedReferences) -> Result<ClassificationResult> {
    // Independent distance evaluations; assembled order-independently.
    let scores: Vec<(String, f64)> = refs
        .refs
        .par_iter()
        .map(|(label, traces)| {
            let best = traces
                .iter()
                .map(|r| normalized_dtw(query, r))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            Ok((label.clone(), best))
        })
        .collect::<Result<Vec<_>>>()?;

    // BTreeMap order makes the argmin tie-break lexicographic.
    let mut per_label_scores = BTreeMap::new();
    for (label, score) in scores {
        per_label_scores.insert(label, score);
    }
    let mut winner: Option<(&str, f64)> = None;
    let mut runner_up = f64::INFINITY;
    for (label, &score) in &per_label_scores {
        match winner {
            None => winner = Some((label, score)),
            Some((_, best)) if score < best => {
                runner_up = best;
                winner = Some((label, score));
            }
            Some(_) => runner_up = runner_up.min(score),
        }
    }
    let (predicted_label, best) = winner.expect("library is non-empty");
    Ok(ClassificationResult {
        predicted_label: predicted_label.to_string(),
        margin: runner_up - best,
        per_label_scores,
    })
}

/// Preprocesses both sides per `cfg` and returns the nearest route label:
/// `argmin` over every reference trace of the normalized DTW distance, with
/// per-label minima reported. Deterministic; label ties break
/// lexicographically.
pub fn classify_route(
    query: &PowerTrace,
    library: &ReferenceLibrary,
    cfg: &PreprocessConfig,
) -> Result<ClassificationResult> {
    let refs = PreparedReferences::from_library(library, cfg)?;
    classify_with(query, &refs, cfg)
}

/// As [`classify_route`] but reusing prepared references.
pub fn classify_with(
    query: &PowerTrace,
    refs: &PreparedReferences,
    cfg: &PreprocessConfig,
) -> Result<ClassificationResult> {
    if query.len() < 2 {
        return Err(Error::invalid(
            "query",
            "need at least two samples to classify",
        ));
    }
    let q = preprocess(query, cfg);
    classify_samples(q.samples(), refs)
}

/// One identification-rate table row.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidationRow {
    pub unique_routes: usize,
    pub refs_per_route: usize,
    /// Size of the per-iteration test pool (every profile not drawn into the
    /// training set; training is balanced per class, the pool is not).
    pub num_test: usize,
    pub correct_fraction: f64,
    pub random_guess_fraction: f64,
}

/// Repeated random-split cross validation: each iteration draws
/// `refs_per_route` training profiles per route uniformly without
/// replacement and classifies every remaining profile. Reproducible per
/// seed.
pub fn cross_validate(
    library: &ReferenceLibrary,
    cfg: &PreprocessConfig,
    refs_per_route: usize,
    iterations: usize,
    seed: u64,
) -> Result<CrossValidationRow> {
    if library.entries.is_empty() {
        return Err(Error::EmptyInput("reference library has no labeled routes"));
    }
    if refs_per_route == 0 || iterations == 0 {
        return Err(Error::invalid(
            "cross validation",
            "refs_per_route and iterations must be >= 1",
        ));
    }
    for (label, traces) in &library.entries {
        if traces.len() <= refs_per_route {
            return Err(Error::invalid(
                "cross validation",
                format!(
                    "route {label:?} has {} profiles; need more than refs_per_route = {}",
                    traces.len(),
                    refs_per_route
                ),
            ));
        }
    }
    cfg.validate()?;

    // Preprocess everything once; iterations only re-partition.
    let prepped: Vec<(String, Vec<Vec<f64>>)> = library
        .entries
        .iter()
        .map(|(label, traces)| {
            (
                label.clone(),
                traces
                    .iter()
                    .map(|t| preprocess(t, cfg).samples().to_vec())
                    .collect(),
            )
        })
        .collect();

    let unique_routes = prepped.len();
    let total: usize = prepped.iter().map(|(_, v)| v.len()).sum();
    let num_test = total - unique_routes * refs_per_route;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut correct = 0usize;
    for _ in 0..iterations {
        // Balanced training draw per class, sequential RNG for determinism.
        let mut train: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        let mut test: Vec<(usize, &Vec<f64>)> = Vec::new();
        for (label_idx, (label, traces)) in prepped.iter().enumerate() {
            let chosen = sample_without_replacement(traces.len(), refs_per_route, &mut rng);
            let mut train_refs = Vec::with_capacity(refs_per_route);
            for (i, t) in traces.iter().enumerate() {
                if chosen.contains(&i) {
                    train_refs.push(t.clone());
                } else {
                    test.push((label_idx, t));
                }
            }
            train.insert(label.clone(), train_refs);
        }
        let refs = PreparedReferences { refs: train };
        let labels: Vec<&String> = prepped.iter().map(|(l, _)| l).collect();
        let hits: usize = test
            .par_iter()
            .map(|(label_idx, samples)| {
                let result = classify_samples(samples, &refs)?;
                Ok(usize::from(&result.predicted_label == labels[*label_idx]))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        correct += hits;
    }

    Ok(CrossValidationRow {
        unique_routes,
        refs_per_route,
        num_test,
        correct_fraction: correct as f64 / (num_test * iterations) as f64,
        random_guess_fraction: 1.0 / unique_routes as f64,
    })
}

/// Partial Fisher-Yates draw of `k` distinct indices from `0..n`, sorted.
fn sample_without_replacement(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let mut chosen = indices[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn library(entries: &[(&str, Vec<Vec<f64>>)]) -> ReferenceLibrary {
        let mut lib = ReferenceLibrary::new();
        for (label, traces) in entries {
            lib.entries.insert(
                label.to_string(),
                traces
                    .iter()
                    .map(|s| PowerTrace::new(1.0, s.clone(), None).unwrap())
                    .collect(),
            );
        }
        lib
    }

    fn plain_cfg() -> PreprocessConfig {
        PreprocessConfig {
            ma_window: 0.0,
            downsample_factor: 1,
            znormalize: true,
            percentile: None,
            peak_truncation: false,
            peak_z_cutoff: 3.0,
        }
    }

    #[test]
    fn identical_reference_wins_with_zero_score() {
        let lib = library(&[
            ("up", vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]),
            ("spike", vec![vec![1.0, 9.0, 1.0, 9.0, 1.0, 9.0]]),
        ]);
        let query = PowerTrace::new(1.0, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], None).unwrap();
        let result = classify_route(&query, &lib, &plain_cfg()).unwrap();
        assert_eq!(result.predicted_label, "up");
        assert_eq!(result.per_label_scores["up"], 0.0);
        assert!(result.margin > 0.0);
    }

    #[test]
    fn empty_library_rejected() {
        let lib = ReferenceLibrary::new();
        let query = PowerTrace::new(1.0, vec![1.0, 2.0], None).unwrap();
        assert!(classify_route(&query, &lib, &plain_cfg()).is_err());
    }

    #[test]
    fn tie_breaks_to_lexicographically_smallest_label() {
        let lib = library(&[
            ("b", vec![vec![1.0, 2.0, 3.0]]),
            ("a", vec![vec![1.0, 2.0, 3.0]]),
        ]);
        let query = PowerTrace::new(1.0, vec![1.0, 2.0, 3.0], None).unwrap();
        let result = classify_route(&query, &lib, &plain_cfg()).unwrap();
        assert_eq!(result.predicted_label, "a");
        assert_eq!(result.margin, 0.0);
    }

    #[test]
    fn label_permutation_equivariance() {
        let shapes = [
            vec![1.0, 5.0, 1.0, 5.0, 1.0, 5.0],
            vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.5],
            vec![2.0, 2.0, 8.0, 8.0, 2.0, 2.0],
        ];
        let lib1 = library(&[
            ("x", vec![shapes[0].clone()]),
            ("y", vec![shapes[1].clone()]),
            ("z", vec![shapes[2].clone()]),
        ]);
        // Renamed: x->z, y->x, z->y.
        let lib2 = library(&[
            ("z", vec![shapes[0].clone()]),
            ("x", vec![shapes[1].clone()]),
            ("y", vec![shapes[2].clone()]),
        ]);
        let query = PowerTrace::new(1.0, vec![1.9, 4.8, 1.2, 5.2, 0.9, 5.1], None).unwrap();
        let r1 = classify_route(&query, &lib1, &plain_cfg()).unwrap();
        let r2 = classify_route(&query, &lib2, &plain_cfg()).unwrap();
        assert_eq!(r1.predicted_label, "x");
        assert_eq!(r2.predicted_label, "z");
        assert_eq!(r1.margin, r2.margin);
    }

    #[test]
    fn scale_invariance_of_prediction() {
        let lib = library(&[
            ("a", vec![vec![1.0, 5.0, 1.0, 5.0, 1.0, 5.0]]),
            ("b", vec![vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.5]]),
        ]);
        let samples = vec![1.1, 4.9, 1.3, 5.2, 0.8, 5.0];
        let scaled: Vec<f64> = samples.iter().map(|x| x * 37.5).collect();
        let q1 = PowerTrace::new(1.0, samples, None).unwrap();
        let q2 = PowerTrace::new(1.0, scaled, None).unwrap();
        let r1 = classify_route(&q1, &lib, &plain_cfg()).unwrap();
        let r2 = classify_route(&q2, &lib, &plain_cfg()).unwrap();
        assert_eq!(r1.predicted_label, r2.predicted_label);
        for (s1, s2) in r1.per_label_scores.values().zip(r2.per_label_scores.values()) {
            assert!((s1 - s2).abs() < 1e-9);
        }
    }

    #[test]
    fn xval_perfect_when_profiles_identical_per_route() {
        // Copies per route, disjoint across routes: zero-distance neighbors.
        let lib = library(&[
            ("a", vec![vec![1.0, 2.0, 3.0]; 4]),
            ("b", vec![vec![9.0, 1.0, 9.0]; 4]),
            ("c", vec![vec![4.0, 4.0, 0.0]; 4]),
        ]);
        let row = cross_validate(&lib, &plain_cfg(), 2, 5, 42).unwrap();
        assert_eq!(row.unique_routes, 3);
        assert_eq!(row.num_test, 6);
        assert_eq!(row.correct_fraction, 1.0);
        assert!((row.random_guess_fraction - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn xval_requires_spare_profiles() {
        let lib = library(&[("a", vec![vec![1.0, 2.0]; 2]), ("b", vec![vec![3.0, 4.0]; 3])]);
        assert!(cross_validate(&lib, &plain_cfg(), 2, 3, 1).is_err());
    }

    #[test]
    fn xval_reproducible_per_seed() {
        let lib = library(&[
            ("a", vec![vec![1.0, 2.0, 3.0], vec![1.1, 2.2, 3.1], vec![0.9, 2.0, 3.2]]),
            ("b", vec![vec![9.0, 1.0, 9.0], vec![8.8, 1.2, 9.1], vec![9.2, 0.8, 8.9]]),
        ]);
        let r1 = cross_validate(&lib, &plain_cfg(), 1, 10, 7).unwrap();
        let r2 = cross_validate(&lib, &plain_cfg(), 1, 10, 7).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn random_guess_for_29_routes_is_3_percent() {
        let entries: Vec<(String, Vec<Vec<f64>>)> = (0..29)
            .map(|i| {
                (
                    format!("r{i:02}"),
                    vec![vec![i as f64, 2.0 * i as f64, 1.0]; 2],
                )
            })
            .collect();
        let mut lib = ReferenceLibrary::new();
        for (label, traces) in entries {
            lib.entries.insert(
                label,
                traces
                    .iter()
                    .map(|s| PowerTrace::new(1.0, s.clone(), None).unwrap())
                    .collect(),
            );
        }
        let row = cross_validate(&lib, &plain_cfg(), 1, 2, 0).unwrap();
        assert!((row.random_guess_fraction - 0.0344827586).abs() < 1e-6);
        assert!((row.random_guess_fraction - 0.03).abs() < 0.005);
    }
}
