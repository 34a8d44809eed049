//! Edit distance between routes as intersection sequences.

use crate::model::Route;

/// Standard Levenshtein distance (unit-cost insert/delete/substitute) over
/// the two routes' intersection sequences, plus the value normalized by the
/// longer route's length. Normalized distance is in [0, 1] and zero exactly
/// when the routes are equal.
pub fn levenshtein_routes(a: &Route, b: &Route) -> (usize, f64) {
    let xs = a.intersections();
    let ys = b.intersections();
    let raw = levenshtein(xs, ys);
    let norm = raw as f64 / xs.len().max(ys.len()) as f64;
    (raw, norm)
}

/// Two-row DP.
fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn route(spec: &str) -> Route {
        Route::parse(spec).unwrap()
    }

    #[test]
    fn equal_routes_are_distance_zero() {
        let a = route("1-2-3-4");
        assert_eq!(levenshtein_routes(&a, &a), (0, 0.0));
    }

    #[test]
    fn single_deletion() {
        let a = route("1-2-3-4");
        let b = route("1-2-4");
        assert_eq!(levenshtein_routes(&a, &b), (1, 0.25));
        assert_eq!(levenshtein_routes(&b, &a), (1, 0.25));
    }

    #[test]
    fn disjoint_equal_length_is_one() {
        let a = route("1-2-3");
        let b = route("4-5-6");
        assert_eq!(levenshtein_routes(&a, &b), (3, 1.0));
    }

    #[test]
    fn matches_brute_force_on_samples() {
        let cases = [
            ("1-2-3-4-5", "1-3-4-5"),
            ("1-2-3", "3-2-1"),
            ("7-7-7-7", "7-7"),
            ("1-2-3-4-5-6", "2-3-9-5-6-6"),
        ];
        for (x, y) in cases {
            let a = route(x);
            let b = route(y);
            let expected =
                crate::oracles::levenshtein_brute(a.intersections(), b.intersections());
            assert_eq!(levenshtein_routes(&a, &b).0, expected, "{x} vs {y}");
        }
    }
}
