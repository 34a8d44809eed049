//! Optimal Subsequence Bijection: monotone partial matching with a fixed
//! jump cost per skipped element.

use crate::error::{Error, Result};

use super::Alignment;

#[derive(Clone, Copy, PartialEq)]
enum Variant {
    /// Every unmatched element of either sequence costs `jump_cost`.
    Symmetric,
    /// Target elements before the first and after the last match are free;
    /// used when a growing prefix is matched against a full route profile.
    FreeTargetEnds,
}

/// Minimal total cost over monotone partial bijections between `query` and
/// `target`: matched pairs cost `|q_i - t_j|`, every unmatched element of
/// either sequence costs `jump_cost`. The empty bijection (cost
/// `(|q| + |t|) * jump_cost`) is admissible; it leaves the offsets unset.
pub fn osb(query: &[f64], target: &[f64], jump_cost: f64) -> Result<Alignment> {
    solve(query, target, jump_cost, Variant::Symmetric)
}

/// OSB variant for prefix tracking: skips in the query and in the interior
/// of the target are charged, but the unmatched head and tail of the target
/// are free, mirroring subsequence DTW's free window placement.
pub fn subsequence_osb(query: &[f64], target: &[f64], jump_cost: f64) -> Result<Alignment> {
    solve(query, target, jump_cost, Variant::FreeTargetEnds)
}

/// Statistical default for the jump cost: mean plus one standard deviation
/// of all pairwise local costs between the two sequences.
pub fn default_jump_cost(query: &[f64], target: &[f64]) -> f64 {
    let n = (query.len() * target.len()) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &q in query {
        for &t in target {
            let c = (q - t).abs();
            sum += c;
            sumsq += c * c;
        }
    }
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    mean + var.sqrt()
}

const CHOICE_FRESH: u8 = 0;
const CHOICE_CONTINUE: u8 = 1;

fn solve(query: &[f64], target: &[f64], jump_cost: f64, variant: Variant) -> Result<Alignment> {
    if query.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput("osb sequence"));
    }
    if !(jump_cost >= 0.0) {
        return Err(Error::invalid("osb", "jump_cost must be >= 0"));
    }
    let (m, n) = (query.len(), target.len());
    let jc = jump_cost;

    // shifted[i][j] = best cost of a matching whose last pair is (i, j),
    // minus jc * (i + j); the shift turns the per-gap jump charges into a
    // constant so a running 2-D prefix minimum gives O(m n) total work.
    let mut shifted = vec![0.0f64; m * n];
    let mut choice = vec![CHOICE_FRESH; m * n];
    // Running prefix minimum of `shifted` with its argmin cell.
    let mut pmin = vec![f64::INFINITY; m * n];
    let mut parg = vec![(0u32, 0u32); m * n];

    for i in 0..m {
        for j in 0..n {
            let idx = i * n + j;
            let c = (query[i] - target[j]).abs();
            let fresh = match variant {
                // Head skips on both sides are charged; the shift cancels
                // them exactly.
                Variant::Symmetric => 0.0,
                // Target head is free, so the shift over-counts by jc * j.
                Variant::FreeTargetEnds => -jc * j as f64,
            };
            let mut best = fresh;
            let mut chosen = CHOICE_FRESH;
            if i > 0 && j > 0 {
                let cont = pmin[idx - n - 1] - 2.0 * jc;
                // Ties extend the existing match (earlier start offset).
                if cont <= best {
                    best = cont;
                    chosen = CHOICE_CONTINUE;
                }
            }
            shifted[idx] = c + best;
            choice[idx] = chosen;

            let mut pv = shifted[idx];
            let mut pa = (i as u32, j as u32);
            if i > 0 && better(pmin[idx - n], parg[idx - n], pv, pa) {
                pv = pmin[idx - n];
                pa = parg[idx - n];
            }
            if j > 0 && better(pmin[idx - 1], parg[idx - 1], pv, pa) {
                pv = pmin[idx - 1];
                pa = parg[idx - 1];
            }
            pmin[idx] = pv;
            parg[idx] = pa;
        }
    }

    // Total cost of ending the matching at (i, j), tail skips included.
    let finish = |i: usize, j: usize| -> f64 {
        match variant {
            Variant::Symmetric => {
                shifted[i * n + j] + jc * (m + n) as f64 - 2.0 * jc
            }
            Variant::FreeTargetEnds => shifted[i * n + j] + jc * j as f64 + jc * (m - 1) as f64,
        }
    };
    let empty_cost = match variant {
        Variant::Symmetric => jc * (m + n) as f64,
        Variant::FreeTargetEnds => jc * m as f64,
    };

    let mut best_cell: Option<(usize, usize)> = None;
    let mut best_cost = f64::INFINITY;
    for j in 0..n {
        for i in 0..m {
            let cost = finish(i, j);
            if cost < best_cost {
                best_cost = cost;
                best_cell = Some((i, j));
            }
        }
    }

    if best_cell.is_none() || empty_cost < best_cost {
        // Nothing worth matching: everything is skipped.
        let skipped_target = match variant {
            Variant::Symmetric => (0..n).collect(),
            Variant::FreeTargetEnds => Vec::new(),
        };
        return Ok(Alignment {
            distance: empty_cost,
            path: Vec::new(),
            start_offset: None,
            end_offset: None,
            skipped_query: (0..m).collect(),
            skipped_target,
        });
    }

    // Reconstruct matched pairs and skip sets.
    let (mut i, mut j) = best_cell.unwrap();
    let (last_i, last_j) = (i, j);
    let mut rev_path = Vec::new();
    loop {
        rev_path.push((i, j));
        if choice[i * n + j] == CHOICE_CONTINUE {
            let (pi, pj) = parg[(i - 1) * n + (j - 1)];
            i = pi as usize;
            j = pj as usize;
        } else {
            break;
        }
    }
    rev_path.reverse();
    let path = rev_path;
    let (first_i, first_j) = path[0];

    let mut skipped_query: Vec<usize> = (0..first_i).collect();
    let mut skipped_target: Vec<usize> = match variant {
        Variant::Symmetric => (0..first_j).collect(),
        Variant::FreeTargetEnds => Vec::new(),
    };
    for w in path.windows(2) {
        let ((i0, j0), (i1, j1)) = (w[0], w[1]);
        skipped_query.extend(i0 + 1..i1);
        skipped_target.extend(j0 + 1..j1);
    }
    skipped_query.extend(last_i + 1..m);
    if variant == Variant::Symmetric {
        skipped_target.extend(last_j + 1..n);
    }

    Ok(Alignment {
        distance: best_cost,
        path,
        start_offset: Some(first_j),
        end_offset: Some(last_j),
        skipped_query,
        skipped_target,
    })
}

/// Strictly better, or equal with a lexicographically smaller cell.
#[inline]
fn better(val: f64, arg: (u32, u32), cur_val: f64, cur_arg: (u32, u32)) -> bool {
    val < cur_val || (val == cur_val && arg < cur_arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences_no_skips() {
        let a = [1.0, 4.0, 2.0, 9.0];
        let al = osb(&a, &a, 100.0).unwrap();
        assert_eq!(al.distance, 0.0);
        assert_eq!(al.path.len(), 4);
        assert!(al.skipped_query.is_empty());
        assert!(al.skipped_target.is_empty());
        assert_eq!(al.start_offset, Some(0));
        assert_eq!(al.end_offset, Some(3));
    }

    #[test]
    fn zero_jump_cost_matches_one_equal_element() {
        let a = [1.0, 50.0, 3.0];
        let b = [9.0, 50.0, 7.0, 4.0];
        let al = osb(&a, &b, 0.0).unwrap();
        assert_eq!(al.distance, 0.0);
    }

    #[test]
    fn outlier_is_skipped_with_small_jump_cost() {
        let clean = [1.0, 2.0, 3.0, 4.0];
        let noisy = [1.0, 2.0, 500.0, 3.0, 4.0];
        let al = osb(&clean, &noisy, 1.0).unwrap();
        assert_eq!(al.distance, 1.0);
        assert_eq!(al.skipped_target, vec![2]);
        assert!(al.skipped_query.is_empty());
    }

    #[test]
    fn empty_bijection_when_matching_is_hopeless() {
        let al = osb(&[0.0], &[100.0], 1.0).unwrap();
        assert_eq!(al.distance, 2.0);
        assert!(al.path.is_empty());
        assert_eq!(al.start_offset, None);
        assert_eq!(al.skipped_query, vec![0]);
        assert_eq!(al.skipped_target, vec![0]);
    }

    #[test]
    fn replay_matches_distance() {
        let a = [1.0, 7.0, 2.0, 9.0, 3.0];
        let b = [2.0, 1.5, 8.0, 2.5, 3.5];
        for jc in [0.0, 0.5, 2.0, 10.0] {
            let al = osb(&a, &b, jc).unwrap();
            assert!((al.replay_cost(&a, &b, jc) - al.distance).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_in_jump_cost() {
        let a = [1.0, 7.0, 2.0, 9.0];
        let b = [2.0, 8.0, 2.5];
        let mut prev = 0.0;
        for jc in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let d = osb(&a, &b, jc).unwrap().distance;
            assert!(d >= prev - 1e-12);
            prev = d;
        }
    }

    #[test]
    fn free_target_ends_ignores_tail() {
        // Query is a prefix of the target; the symmetric variant charges the
        // tail, the subsequence variant does not.
        let q = [1.0, 2.0, 3.0];
        let t = [1.0, 2.0, 3.0, 50.0, 60.0, 70.0];
        let sym = osb(&q, &t, 1.0).unwrap();
        let sub = subsequence_osb(&q, &t, 1.0).unwrap();
        assert_eq!(sub.distance, 0.0);
        assert_eq!(sub.end_offset, Some(2));
        assert_eq!(sym.distance, 3.0);
    }

    #[test]
    fn free_target_ends_charges_interior() {
        let q = [1.0, 2.0, 2.0];
        let t = [1.0, 50.0, 2.0, 2.0];
        let al = subsequence_osb(&q, &t, 0.5).unwrap();
        assert_eq!(al.distance, 0.5);
        assert_eq!(al.path, vec![(0, 0), (1, 2), (2, 3)]);
        assert_eq!(al.skipped_target, vec![1]);
        assert!(al.skipped_query.is_empty());
        assert!((al.replay_cost(&q, &t, 0.5) - al.distance).abs() < 1e-12);
    }

    #[test]
    fn default_jump_cost_mean_plus_std() {
        // Pairwise costs of [0], [1, 3]: {1, 3} -> mean 2, std 1.
        let jc = default_jump_cost(&[0.0], &[1.0, 3.0]);
        assert!((jc - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_rejected() {
        assert!(osb(&[], &[1.0], 1.0).is_err());
        assert!(subsequence_osb(&[1.0], &[], 1.0).is_err());
    }
}
