//! Brute-force reference implementations used to validate the dynamic
//! programs in [`similarity`](crate::similarity) and
//! [`eval`](crate::eval). Exponential or worse; only suitable for the short
//! sequences the test suites feed them. None of these share code with the
//! implementations they check.

/// Memo-free recursive DTW over the three-step pattern with absolute-value
/// local cost. Exponential in `a.len() + b.len()`.
pub fn dtw_brute(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    fn rec(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
        let c = (a[i] - b[j]).abs();
        if i == 0 && j == 0 {
            return c;
        }
        let mut best = f64::INFINITY;
        if i > 0 && j > 0 {
            best = best.min(rec(a, b, i - 1, j - 1));
        }
        if i > 0 {
            best = best.min(rec(a, b, i - 1, j));
        }
        if j > 0 {
            best = best.min(rec(a, b, i, j - 1));
        }
        c + best
    }
    rec(a, b, a.len() - 1, b.len() - 1)
}

/// Subsequence DTW by exhaustive enumeration of contiguous target windows:
/// minimal full-DTW cost, ties resolved to the smallest start offset, then
/// the smallest end offset.
pub fn subsequence_brute(query: &[f64], target: &[f64]) -> (f64, usize, usize) {
    assert!(!query.is_empty() && !target.is_empty());
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for s in 0..target.len() {
        for e in s..target.len() {
            let cost = dtw_brute(query, &target[s..=e]);
            if cost < best.0 {
                best = (cost, s, e);
            }
        }
    }
    best
}

/// OSB by exhaustive enumeration of monotone partial bijections, the empty
/// bijection included. Every unmatched element of either sequence is charged
/// `jump_cost`; with `free_target_ends`, target elements before the first
/// and after the last matched pair are free.
pub fn osb_brute(query: &[f64], target: &[f64], jump_cost: f64, free_target_ends: bool) -> f64 {
    assert!(!query.is_empty() && !target.is_empty());
    let (m, n) = (query.len(), target.len());
    let mut best = f64::INFINITY;
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    fn score(
        pairs: &[(usize, usize)],
        query: &[f64],
        target: &[f64],
        jc: f64,
        free_ends: bool,
    ) -> f64 {
        let matched: f64 = pairs.iter().map(|&(i, j)| (query[i] - target[j]).abs()).sum();
        let skipped_q = query.len() - pairs.len();
        let skipped_t = if pairs.is_empty() {
            if free_ends {
                0
            } else {
                target.len()
            }
        } else if free_ends {
            // Interior gaps only.
            pairs
                .windows(2)
                .map(|w| w[1].1 - w[0].1 - 1)
                .sum::<usize>()
        } else {
            target.len() - pairs.len()
        };
        matched + jc * (skipped_q + skipped_t) as f64
    }

    fn rec(
        i: usize,
        j: usize,
        m: usize,
        n: usize,
        pairs: &mut Vec<(usize, usize)>,
        query: &[f64],
        target: &[f64],
        jc: f64,
        free_ends: bool,
        best: &mut f64,
    ) {
        let s = score(pairs, query, target, jc, free_ends);
        if s < *best {
            *best = s;
        }
        for ni in i..m {
            for nj in j..n {
                pairs.push((ni, nj));
                rec(ni + 1, nj + 1, m, n, pairs, query, target, jc, free_ends, best);
                pairs.pop();
            }
        }
    }

    rec(
        0,
        0,
        m,
        n,
        &mut pairs,
        query,
        target,
        jump_cost,
        free_target_ends,
        &mut best,
    );
    best
}

/// Exhaustive route decoder: depth-first search over every feasible route
/// from the model's start, consuming durations greedily per segment exactly
/// as the particle filter does, scored by mean per-segment cost. Only the
/// per-segment scoring function is shared with the filter; the search is
/// exhaustive rather than Monte Carlo. Candidates are routes that can no
/// longer extend (observation exhausted, dead end, or depth cap); ties break
/// to the lexicographically smaller intersection sequence.
pub fn enumerate_best_route(
    observation: &crate::model::PowerTrace,
    model: &crate::inference::HmmModel,
    max_depth: usize,
) -> crate::error::Result<Option<(crate::model::Route, f64)>> {
    use crate::inference::segment_likelihood_weight;
    use crate::model::IntersectionId;

    struct Search<'a> {
        observation: &'a crate::model::PowerTrace,
        model: &'a crate::inference::HmmModel,
        max_depth: usize,
        best: Option<(Vec<IntersectionId>, f64)>,
    }

    impl Search<'_> {
        fn dfs(
            &mut self,
            state: (IntersectionId, IntersectionId),
            t_end: f64,
            nodes: &mut Vec<IntersectionId>,
            cost_sum: f64,
        ) -> crate::error::Result<()> {
            let mut extended = false;
            if nodes.len() - 1 < self.max_depth {
                let continuations = self.model.continuations(state.0, state.1).to_vec();
                for z in continuations {
                    let triple = (state.0, state.1, z);
                    if let Some((cost, duration)) =
                        segment_likelihood_weight(self.observation, t_end, triple, self.model)?
                    {
                        extended = true;
                        nodes.push(z);
                        self.dfs((state.1, z), t_end + duration, nodes, cost_sum + cost)?;
                        nodes.pop();
                    }
                }
            }
            if !extended && nodes.len() >= 2 {
                let mean = cost_sum / (nodes.len() - 1) as f64;
                let better = match &self.best {
                    None => true,
                    Some((b_nodes, b_mean)) => {
                        mean < *b_mean || (mean == *b_mean && nodes.as_slice() < b_nodes.as_slice())
                    }
                };
                if better {
                    self.best = Some((nodes.clone(), mean));
                }
            }
            Ok(())
        }
    }

    let mut search = Search {
        observation,
        model,
        max_depth,
        best: None,
    };
    for &context in model.initial_contexts() {
        let mut nodes = vec![model.start];
        search.dfs((context, model.start), 0.0, &mut nodes, 0.0)?;
    }
    search
        .best
        .map(|(nodes, mean)| crate::model::Route::new(nodes).map(|r| (r, mean)))
        .transpose()
}

/// Memo-free recursive Levenshtein distance over arbitrary symbol slices.
pub fn levenshtein_brute<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn rec<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        let sub = rec(a, b, i - 1, j - 1) + usize::from(a[i - 1] != b[j - 1]);
        let del = rec(a, b, i - 1, j) + 1;
        let ins = rec(a, b, i, j - 1) + 1;
        sub.min(del).min(ins)
    }
    rec(a, b, a.len(), b.len())
}
