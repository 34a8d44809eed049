//! Sequence-alignment distances over 1-D value sequences: full DTW,
//! normalized DTW, subsequence DTW with window offsets, and Optimal
//! Subsequence Bijection with per-element jump costs.
//!
//! All local costs are absolute differences. Where several optimal
//! alignments exist the one with the smallest start offset, then smallest
//! end offset, is returned; backtracking prefers diagonal over vertical over
//! horizontal steps. Determinism over elegance.

mod dtw;
mod osb;

pub use dtw::{dtw_distance, normalized_dtw, subsequence_dtw};
pub use osb::{default_jump_cost, osb, subsequence_osb};

/// Result of aligning a query sequence against a target sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Total alignment cost: matched-pair local costs plus (for OSB) jump
    /// penalties.
    pub distance: f64,
    /// Matched index pairs (query, target), monotone in both coordinates.
    /// DTW paths step by (1,0), (0,1) or (1,1); OSB paths may jump, with
    /// every jumped-over element recorded in the skipped sets.
    pub path: Vec<(usize, usize)>,
    /// First matched target index. `None` only for an OSB alignment that
    /// matched nothing.
    pub start_offset: Option<usize>,
    /// Last matched target index; the tracking position readout.
    pub end_offset: Option<usize>,
    /// Query indices skipped at a jump cost (OSB only).
    pub skipped_query: Vec<usize>,
    /// Target indices skipped at a jump cost (OSB only; the subsequence
    /// variant's free head/tail elements are not listed).
    pub skipped_target: Vec<usize>,
}

impl Alignment {
    /// Distance divided by the number of matched pairs, compensating for
    /// sequence length. Infinite when nothing was matched.
    pub fn normalized_distance(&self) -> f64 {
        if self.path.is_empty() {
            f64::INFINITY
        } else {
            self.distance / self.path.len() as f64
        }
    }

    /// Recomputes the distance from the path and skip sets. Test hook for
    /// the path-reconstruction invariant.
    pub fn replay_cost(&self, query: &[f64], target: &[f64], jump_cost: f64) -> f64 {
        let matched: f64 = self
            .path
            .iter()
            .map(|&(i, j)| (query[i] - target[j]).abs())
            .sum();
        matched + jump_cost * (self.skipped_query.len() + self.skipped_target.len()) as f64
    }
}
