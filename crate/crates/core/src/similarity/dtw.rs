//! Dynamic time warping: full-sequence and subsequence variants.

use crate::error::{Error, Result};

use super::Alignment;

const STEP_DIAG: u8 = 0;
const STEP_UP: u8 = 1; // advance query only
const STEP_LEFT: u8 = 2; // advance target only
const STEP_START: u8 = 3;

#[inline]
fn local(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// Full DTW alignment cost between `a` and `b` under local cost `|a_i - b_j|`
/// and the three-step symmetric pattern, with the optimal warping path.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<Alignment> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("dtw sequence"));
    }
    let (m, n) = (a.len(), b.len());
    let mut cost = vec![0.0f64; m * n];
    let mut step = vec![STEP_START; m * n];
    for i in 0..m {
        for j in 0..n {
            let c = local(a[i], b[j]);
            let idx = i * n + j;
            if i == 0 && j == 0 {
                cost[idx] = c;
                continue;
            }
            // Diagonal preferred on ties, then vertical, then horizontal.
            let mut best = f64::INFINITY;
            let mut chosen = STEP_START;
            if i > 0 && j > 0 && cost[idx - n - 1] < best {
                best = cost[idx - n - 1];
                chosen = STEP_DIAG;
            }
            if i > 0 && cost[idx - n] < best {
                best = cost[idx - n];
                chosen = STEP_UP;
            }
            if j > 0 && cost[idx - 1] < best {
                best = cost[idx - 1];
                chosen = STEP_LEFT;
            }
            cost[idx] = c + best;
            step[idx] = chosen;
        }
    }

    let mut path = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m - 1, n - 1);
    loop {
        path.push((i, j));
        match step[i * n + j] {
            STEP_DIAG => {
                i -= 1;
                j -= 1;
            }
            STEP_UP => i -= 1,
            STEP_LEFT => j -= 1,
            _ => break,
        }
    }
    path.reverse();
    Ok(Alignment {
        distance: cost[m * n - 1],
        path,
        start_offset: Some(0),
        end_offset: Some(n - 1),
        skipped_query: Vec::new(),
        skipped_target: Vec::new(),
    })
}

/// DTW distance divided by the optimal warping-path length, compensating for
/// length differences between routes.
pub fn normalized_dtw(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(dtw_distance(a, b)?.normalized_distance())
}

/// Aligns the whole `query` against the best contiguous window of `target`:
/// minimal full-DTW cost over all windows, with the window's start and end
/// offsets. Ties resolve to the smallest start offset, then smallest end.
pub fn subsequence_dtw(query: &[f64], target: &[f64]) -> Result<Alignment> {
    if query.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput("subsequence dtw sequence"));
    }
    let (m, n) = (query.len(), target.len());
    let mut cost = vec![0.0f64; m * n];
    let mut start = vec![0u32; m * n];
    let mut step = vec![STEP_START; m * n];

    for j in 0..n {
        let c = local(query[0], target[j]);
        // A window may open at any target index; continuing leftward is only
        // ever as good when the accumulated cost is zero, in which case the
        // earlier start wins the tie.
        if j > 0 && cost[j - 1] <= 0.0 {
            cost[j] = c;
            start[j] = start[j - 1];
            step[j] = STEP_LEFT;
        } else {
            cost[j] = c;
            start[j] = j as u32;
            step[j] = STEP_START;
        }
    }
    for i in 1..m {
        for j in 0..n {
            let idx = i * n + j;
            let c = local(query[i], target[j]);
            let mut best = f64::INFINITY;
            let mut best_start = u32::MAX;
            let mut chosen = STEP_START;
            let mut consider = |cand_cost: f64, cand_start: u32, cand_step: u8| {
                if cand_cost < best || (cand_cost == best && cand_start < best_start) {
                    best = cand_cost;
                    best_start = cand_start;
                    chosen = cand_step;
                }
            };
            if j > 0 {
                consider(cost[idx - n - 1], start[idx - n - 1], STEP_DIAG);
            }
            consider(cost[idx - n], start[idx - n], STEP_UP);
            if j > 0 {
                consider(cost[idx - 1], start[idx - 1], STEP_LEFT);
            }
            cost[idx] = c + best;
            start[idx] = best_start;
            step[idx] = chosen;
        }
    }

    let last = (m - 1) * n;
    let mut best_j = 0;
    for j in 1..n {
        let better = cost[last + j] < cost[last + best_j]
            || (cost[last + j] == cost[last + best_j] && start[last + j] < start[last + best_j]);
        if better {
            best_j = j;
        }
    }

    let mut path = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m - 1, best_j);
    loop {
        path.push((i, j));
        match step[i * n + j] {
            STEP_DIAG => {
                i -= 1;
                j -= 1;
            }
            STEP_UP => i -= 1,
            STEP_LEFT => j -= 1,
            _ => break,
        }
    }
    path.reverse();
    Ok(Alignment {
        distance: cost[last + best_j],
        path,
        start_offset: Some(start[last + best_j] as usize),
        end_offset: Some(best_j),
        skipped_query: Vec::new(),
        skipped_target: Vec::new(),
    })
}
