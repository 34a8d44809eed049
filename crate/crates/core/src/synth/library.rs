//! Reference-library generation: whole-route recordings for the classifier
//! and tracker, and hysteresis-aware per-segment recordings for route
//! inference (every segment entered from every feasible direction).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::{feasible_triples, slice_trace, ReferenceLibrary, RoadGraph, Route, TripleKey};
use crate::synth::field::derive_seed;
use crate::synth::{simulate_drive, DrivePlan, World};

/// What to record into a library.
#[derive(Debug, Clone, Default)]
pub struct LibrarySpec {
    /// Whole-route recordings, one list per label.
    pub routes: BTreeMap<String, Route>,
    pub route_reps: usize,
    /// Recordings per feasible (entered-from, from, to) triple; 0 skips the
    /// segment library entirely.
    pub segment_reps: usize,
    pub seed: u64,
}

/// Simulates the recording sessions described by `spec`. Each segment entry
/// is produced by driving the two-segment route `x -> y -> z` and keeping
/// the `(y, z)` portion, so the attachment state at the segment boundary
/// carries the hysteresis imprint of the approach direction.
pub fn build_reference_library(
    world: &World,
    graph: &RoadGraph,
    spec: &LibrarySpec,
) -> Result<ReferenceLibrary> {
    let mut lib = ReferenceLibrary::new();

    let route_tasks: Vec<(String, Route, usize)> = spec
        .routes
        .iter()
        .flat_map(|(label, route)| {
            (0..spec.route_reps).map(move |rep| (label.clone(), route.clone(), rep))
        })
        .collect();
    let route_results: Vec<(String, crate::model::PowerTrace)> = route_tasks
        .par_iter()
        .map(|(label, route, rep)| {
            let label_hash = derive_seed(0, label, &[]);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                spec.seed,
                "library-route",
                &[label_hash, *rep as u64],
            ));
            let plan = DrivePlan::sample(route.clone(), &world.config.kinematics, &mut rng);
            let rec = simulate_drive(world, graph, &plan)?;
            Ok((label.clone(), rec.trace))
        })
        .collect::<Result<Vec<_>>>()?;
    for (label, trace) in route_results {
        lib.entries.entry(label).or_default().push(trace);
    }

    if spec.segment_reps > 0 {
        let triples: Vec<TripleKey> = feasible_triples(graph).into_iter().collect();
        let tasks: Vec<(TripleKey, usize)> = triples
            .iter()
            .flat_map(|&t| (0..spec.segment_reps).map(move |rep| (t, rep)))
            .collect();
        let seg_results: Vec<(TripleKey, crate::model::PowerTrace)> = tasks
            .par_iter()
            .map(|&((x, y, z), rep)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    spec.seed,
                    "library-segment",
                    &[x.0 as u64, y.0 as u64, z.0 as u64, rep as u64],
                ));
                let route = Route::new(vec![x, y, z])?;
                let plan = DrivePlan::sample(route, &world.config.kinematics, &mut rng);
                let rec = simulate_drive(world, graph, &plan)?;
                // Keep only the (y, z) portion; attachment memory from (x, y)
                // is already baked into the samples.
                let end = rec.trace.duration();
                let seg = slice_trace(&rec.trace, rec.boundary_times[0], end)?
                    .with_meta("triple", format!("{x}-{y}-{z}"))?;
                Ok(((x, y, z), seg))
            })
            .collect::<Result<Vec<_>>>()?;
        for (key, trace) in seg_results {
            lib.segment_entries.entry(key).or_default().push(trace);
        }
    }

    lib.validate(Some(graph))?;
    Ok(lib)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::fixtures;

    #[test]
    fn covers_every_feasible_triple() {
        let (world, graph) = fixtures::tiny4();
        let spec = LibrarySpec {
            routes: BTreeMap::new(),
            route_reps: 0,
            segment_reps: 1,
            seed: 5,
        };
        let lib = build_reference_library(&world, &graph, &spec).unwrap();
        let expected = feasible_triples(&graph);
        let got: std::collections::BTreeSet<_> =
            lib.segment_entries.keys().copied().collect();
        assert_eq!(got, expected);
        assert!(lib.segment_entries.values().all(|v| v.len() == 1));
    }

    #[test]
    fn repetition_count_honored_and_deterministic() {
        let (world, graph, routes) = fixtures::routes8();
        let spec = LibrarySpec {
            routes: routes.clone(),
            route_reps: 2,
            segment_reps: 0,
            seed: 9,
        };
        let a = build_reference_library(&world, &graph, &spec).unwrap();
        let b = build_reference_library(&world, &graph, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries.len(), 8);
        assert!(a.entries.values().all(|v| v.len() == 2));
    }

    #[test]
    fn segment_recordings_cover_one_segment_duration() {
        let (world, graph) = fixtures::tiny4();
        let spec = LibrarySpec {
            routes: BTreeMap::new(),
            route_reps: 0,
            segment_reps: 1,
            seed: 3,
        };
        let lib = build_reference_library(&world, &graph, &spec).unwrap();
        for ((_, y, z), traces) in &lib.segment_entries {
            let seg = graph.segment(*y, *z).unwrap();
            for t in traces {
                // At fixture speeds (8-16 m/s plus stops) a segment takes
                // between length/16 and length/8 + max stop seconds.
                let dur = t.duration();
                let min = seg.length_m / 20.0;
                let max = seg.length_m / 8.0 + 30.0;
                assert!(dur > min && dur < max, "duration {dur} outside ({min}, {max})");
            }
        }
    }
}
