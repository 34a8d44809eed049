//! Decoders over the final particle population: plain mode, and the
//! prefix-prevalence iterative majority vote that counters the filter's
//! recency bias (per-step weights only ever score the newest segment, so
//! the population over-represents routes with well-matched endings).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{IntersectionId, RoadGraph, Route};

use super::RouteHypothesis;

/// The route appearing most often in the population; ties break to the
/// lexicographically smallest intersection sequence.
pub fn most_frequent_route(p_final: &[RouteHypothesis]) -> Result<Route> {
    if p_final.is_empty() {
        return Err(Error::EmptyInput("particle set"));
    }
    let mut counts: BTreeMap<&[IntersectionId], usize> = BTreeMap::new();
    for p in p_final {
        if p.nodes.len() >= 2 {
            *counts.entry(p.nodes.as_slice()).or_default() += 1;
        }
    }
    let mut best: Option<(&[IntersectionId], usize)> = None;
    for (nodes, count) in counts {
        // Strict improvement keeps the smallest sequence on count ties
        // (BTreeMap iterates in ascending key order).
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((nodes, count));
        }
    }
    match best {
        Some((nodes, _)) => Route::new(nodes.to_vec()),
        None => Err(Error::EmptyInput("no extended route hypothesis")),
    }
}

/// Iterative majority vote: level by level, each ranked prefix of length i
/// is extended by every intersection that continues it in the population,
/// best-supported first (count ties to the smaller id), consuming the
/// candidate pool and resetting it when a prefix has no continuation left.
/// Extensions inherit their parent prefix's rank order, so descendants of a
/// higher-ranked prefix always outrank descendants of a lower-ranked one.
/// Returns the top-ranked prefix of maximal length.
pub fn iterative_majority_vote(p_final: &[RouteHypothesis], graph: &RoadGraph) -> Result<Route> {
    if p_final.is_empty() {
        return Err(Error::EmptyInput("particle set"));
    }
    let routes: Vec<&[IntersectionId]> = p_final
        .iter()
        .filter(|p| p.nodes.len() >= 2)
        .map(|p| p.nodes.as_slice())
        .collect();
    if routes.is_empty() {
        return Err(Error::EmptyInput("no extended route hypothesis"));
    }
    let all_ids: Vec<IntersectionId> = graph.intersections().keys().copied().collect();

    // Level 1: starting intersections ranked by prevalence.
    let mut level: Vec<Vec<IntersectionId>> = {
        let mut counts: BTreeMap<IntersectionId, usize> = BTreeMap::new();
        for r in &routes {
            *counts.entry(r[0]).or_default() += 1;
        }
        let mut firsts: Vec<(IntersectionId, usize)> = counts.into_iter().collect();
        firsts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        firsts.into_iter().map(|(id, _)| vec![id]).collect()
    };
    let mut result = level[0].clone();

    loop {
        let mut next_level: Vec<Vec<IntersectionId>> = Vec::new();
        for prefix in &level {
            let mut pool: Vec<IntersectionId> = all_ids.clone();
            loop {
                // Most common continuation of `prefix` still in the pool.
                let mut best: Option<(usize, IntersectionId)> = None;
                for &j in &pool {
                    let count = routes
                        .iter()
                        .filter(|r| {
                            r.len() > prefix.len()
                                && r[..prefix.len()] == prefix[..]
                                && r[prefix.len()] == j
                        })
                        .count();
                    if count == 0 {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((c, id)) => count > c || (count == c && j < id),
                    };
                    if better {
                        best = Some((count, j));
                    }
                }
                match best {
                    None => break, // pool exhausted for this prefix
                    Some((_, j)) => {
                        let mut extended = prefix.clone();
                        extended.push(j);
                        next_level.push(extended);
                        pool.retain(|&id| id != j);
                    }
                }
            }
        }
        if next_level.is_empty() {
            break;
        }
        result = next_level[0].clone();
        level = next_level;
    }

    Route::new(result)
}

/// Both decoder outputs: (most frequent route, iterative majority vote).
/// Selection between them happens only in evaluation, where the better of
/// the two per track is also scored.
pub fn estimate_pair(
    p_final: &[RouteHypothesis],
    graph: &RoadGraph,
) -> Result<(Route, Route)> {
    let frequent = most_frequent_route(p_final)?;
    let imv = iterative_majority_vote(p_final, graph)?;
    Ok((frequent, imv))
}
