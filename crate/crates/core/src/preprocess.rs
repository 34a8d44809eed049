//! Signal conditioning ahead of distance computation: transient-peak
//! truncation, moving-average smoothing, block-mean downsampling,
//! z-normalization, and percentile thresholding.

use serde::{Deserialize, Serialize};

use crate::model::PowerTrace;

/// Configuration for the conditioning pipeline. Stages run in the order
/// `truncate_peaks -> moving_average -> downsample -> znormalize ->
/// percentile_threshold`; each stage can be disabled through its field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Moving-average window in seconds; 0 disables smoothing.
    pub ma_window: f64,
    /// Block-mean downsampling factor; 1 disables.
    pub downsample_factor: usize,
    /// Mean-subtract and scale to unit deviation; baseline compensation
    /// across devices and running applications.
    pub znormalize: bool,
    /// Quantile in [0, 1] below which values are zeroed after normalization;
    /// `None` disables thresholding.
    pub percentile: Option<f64>,
    /// Clip samples whose z-score magnitude exceeds `peak_z_cutoff`.
    pub peak_truncation: bool,
    pub peak_z_cutoff: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            ma_window: 5.0,
            downsample_factor: 10,
            znormalize: true,
            percentile: None,
            peak_truncation: false,
            peak_z_cutoff: 3.0,
        }
    }
}

impl PreprocessConfig {
    /// Defaults used when scoring observation slices against per-segment
    /// references: light smoothing, then normalize and keep only the top
    /// power peaks. Thresholding without smoothing first lets noise spikes
    /// crowd out the location-dependent peaks.
    pub fn for_route_inference() -> Self {
        PreprocessConfig {
            ma_window: 2.0,
            downsample_factor: 5,
            znormalize: true,
            percentile: Some(0.9),
            peak_truncation: false,
            peak_z_cutoff: 3.0,
        }
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        if !(self.ma_window >= 0.0) {
            return Err(crate::error::Error::invalid(
                "preprocess config",
                "ma_window must be >= 0",
            ));
        }
        if self.downsample_factor == 0 {
            return Err(crate::error::Error::invalid(
                "preprocess config",
                "downsample_factor must be >= 1",
            ));
        }
        if let Some(p) = self.percentile {
            if !(0.0..=1.0).contains(&p) {
                return Err(crate::error::Error::invalid(
                    "preprocess config",
                    "percentile must be in [0, 1]",
                ));
            }
        }
        if !(self.peak_z_cutoff > 0.0) {
            return Err(crate::error::Error::invalid(
                "preprocess config",
                "peak_z_cutoff must be > 0",
            ));
        }
        Ok(())
    }
}

/// Runs the full conditioning pipeline on one trace.
pub fn preprocess(trace: &PowerTrace, cfg: &PreprocessConfig) -> PowerTrace {
    let mut t = if cfg.peak_truncation {
        truncate_peaks(trace, cfg.peak_z_cutoff)
    } else {
        trace.clone()
    };
    if cfg.ma_window > 0.0 {
        t = moving_average(&t, cfg.ma_window);
    }
    if cfg.downsample_factor > 1 {
        t = downsample(&t, cfg.downsample_factor);
    }
    if cfg.znormalize {
        t = znormalize(&t).0;
    }
    if let Some(p) = cfg.percentile {
        t = percentile_threshold(&t, p);
    }
    t
}

/// Centered moving average with the window truncated at the boundaries.
/// `window` is in seconds; windows that round to one sample or less leave the
/// trace unchanged.
pub fn moving_average(trace: &PowerTrace, window: f64) -> PowerTrace {
    assert!(window >= 0.0, "window must be >= 0");
    let span = (window / trace.sample_period()).round() as usize;
    if span <= 1 {
        return trace.clone();
    }
    let half = span / 2;
    let xs = trace.samples();
    let n = xs.len();
    // Prefix sums keep this O(n) for the long traces the tracker feeds in.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &x in xs {
        prefix.push(prefix.last().unwrap() + x);
    }
    let out: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect();
    trace.map_samples(out)
}

/// Block-mean downsampling: output length `ceil(n / factor)`, each output
/// sample the mean of its block, sample period multiplied by `factor`.
/// Ground truth takes the block's last coordinate.
pub fn downsample(trace: &PowerTrace, factor: usize) -> PowerTrace {
    assert!(factor >= 1, "factor must be >= 1");
    if factor == 1 {
        return trace.clone();
    }
    let xs = trace.samples();
    let n = xs.len();
    let mut samples = Vec::with_capacity(n.div_ceil(factor));
    let mut coords = trace.ground_truth().map(|_| Vec::with_capacity(n.div_ceil(factor)));
    let mut start = 0;
    while start < n {
        let end = (start + factor).min(n);
        let mean = xs[start..end].iter().sum::<f64>() / (end - start) as f64;
        samples.push(mean);
        if let (Some(out), Some(gt)) = (coords.as_mut(), trace.ground_truth()) {
            out.push(gt[end - 1]);
        }
        start = end;
    }
    trace.replace_parts(trace.sample_period() * factor as f64, samples, coords)
}

/// Subtracts the mean and divides by the population standard deviation.
/// A constant input has no scale; it maps to all zeros and the returned flag
/// is true so batch callers can surface a warning instead of aborting.
pub fn znormalize(trace: &PowerTrace) -> (PowerTrace, bool) {
    let xs = trace.samples();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return (trace.map_samples(vec![0.0; xs.len()]), true);
    }
    let out = xs.iter().map(|x| (x - mean) / std).collect();
    (trace.map_samples(out), false)
}

/// Zeroes every value strictly below the `pct`-quantile, keeping values at or
/// above it. The quantile is nearest-rank on the sorted sample: the value at
/// ascending index `min(n-1, floor(pct * n))`, so `pct = 0.9` over ten
/// distinct values keeps exactly the largest.
pub fn percentile_threshold(trace: &PowerTrace, pct: f64) -> PowerTrace {
    assert!((0.0..=1.0).contains(&pct), "pct must be in [0, 1]");
    let xs = trace.samples();
    if pct == 0.0 {
        return trace.clone();
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((pct * xs.len() as f64).floor() as usize).min(xs.len() - 1);
    let q = sorted[idx];
    let out = xs.iter().map(|&x| if x < q { 0.0 } else { x }).collect();
    trace.map_samples(out)
}

/// Clips samples whose z-score magnitude exceeds `z_cutoff` to
/// `mean ± z_cutoff · std`. Mean and std are computed once on the input, so
/// a second pass is the identity.
pub fn truncate_peaks(trace: &PowerTrace, z_cutoff: f64) -> PowerTrace {
    assert!(z_cutoff > 0.0, "z_cutoff must be > 0");
    let xs = trace.samples();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return trace.clone();
    }
    let (lo, hi) = (mean - z_cutoff * std, mean + z_cutoff * std);
    let out = xs.iter().map(|&x| x.clamp(lo, hi)).collect();
    trace.map_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trace(samples: Vec<f64>) -> PowerTrace {
        PowerTrace::new(1.0, samples, None).unwrap()
    }

    #[test]
    fn moving_average_constant_unchanged() {
        let t = trace(vec![5.0; 20]);
        let out = moving_average(&t, 5.0);
        assert_eq!(out.samples(), t.samples());
    }

    #[test]
    fn moving_average_zero_window_is_identity() {
        let t = trace(vec![1.0, 9.0, 3.0]);
        assert_eq!(moving_average(&t, 0.0).samples(), t.samples());
    }

    #[test]
    fn moving_average_three_sample_window() {
        // Oracle: direct means over the centered window, truncated at edges.
        let t = trace(vec![0.0, 10.0, 0.0]);
        let out = moving_average(&t, 3.0);
        assert_relative_eq!(out.samples()[0], 5.0);
        assert_relative_eq!(out.samples()[1], 10.0 / 3.0);
        assert_relative_eq!(out.samples()[2], 5.0);
    }

    #[test]
    fn downsample_factor_one_is_identity() {
        let t = trace(vec![1.0, 2.0, 3.0]);
        assert_eq!(downsample(&t, 1), t);
    }

    #[test]
    fn downsample_block_means() {
        let t = trace(vec![1.0, 2.0, 3.0, 4.0]);
        let out = downsample(&t, 2);
        assert_eq!(out.samples(), &[1.5, 3.5]);
        assert_eq!(out.sample_period(), 2.0);
    }

    #[test]
    fn downsample_hundred_by_ten() {
        let t = trace((0..100).map(|i| i as f64).collect());
        let out = downsample(&t, 10);
        assert_eq!(out.len(), 10);
    }

    #[test]
    fn downsample_ragged_tail_and_ground_truth() {
        use crate::model::LatLon;
        let gt: Vec<LatLon> = (0..5)
            .map(|i| LatLon::new(i as f64 * 0.001, 0.0).unwrap())
            .collect();
        let t = PowerTrace::new(1.0, vec![1.0, 2.0, 3.0, 4.0, 5.0], Some(gt)).unwrap();
        let out = downsample(&t, 2);
        assert_eq!(out.samples(), &[1.5, 3.5, 5.0]);
        let coords = out.ground_truth().unwrap();
        // Block's last coordinate.
        assert_relative_eq!(coords[0].lat, 0.001);
        assert_relative_eq!(coords[1].lat, 0.003);
        assert_relative_eq!(coords[2].lat, 0.004);
    }

    #[test]
    fn znormalize_hand_computed() {
        // mean 2, population std sqrt(2/3).
        let t = trace(vec![1.0, 2.0, 3.0]);
        let (out, degenerate) = znormalize(&t);
        assert!(!degenerate);
        let s = (2.0f64 / 3.0).sqrt();
        assert_relative_eq!(out.samples()[0], -1.0 / s, epsilon = 1e-12);
        assert_relative_eq!(out.samples()[0], -1.224744871391589, epsilon = 1e-12);
        assert_relative_eq!(out.samples()[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(out.samples()[2], 1.224744871391589, epsilon = 1e-12);
    }

    #[test]
    fn znormalize_constant_flags_warning() {
        let t = trace(vec![5.0, 5.0, 5.0]);
        let (out, degenerate) = znormalize(&t);
        assert!(degenerate);
        assert_eq!(out.samples(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn znormalize_moments() {
        let t = trace(vec![4.0, 8.0, 15.0, 16.0, 23.0, 42.0]);
        let (out, _) = znormalize(&t);
        let n = out.len() as f64;
        let mean = out.samples().iter().sum::<f64>() / n;
        let var = out.samples().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn znormalize_affine_invariance() {
        let t = trace(vec![4.0, 8.0, 15.0, 16.0]);
        let scaled = trace(t.samples().iter().map(|x| 3.5 * x + 100.0).collect());
        let (a, _) = znormalize(&t);
        let (b, _) = znormalize(&scaled);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_relative_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn percentile_zero_is_identity() {
        let t = trace(vec![3.0, 1.0, 2.0]);
        assert_eq!(percentile_threshold(&t, 0.0), t);
    }

    #[test]
    fn percentile_ninety_keeps_largest_of_ten() {
        let t = trace((1..=10).map(|i| i as f64).collect());
        let out = percentile_threshold(&t, 0.9);
        let kept: Vec<f64> = out.samples().iter().copied().filter(|&x| x > 0.0).collect();
        assert_eq!(kept, vec![10.0]);
    }

    #[test]
    fn percentile_all_equal_is_identity() {
        let t = trace(vec![7.0; 8]);
        assert_eq!(percentile_threshold(&t, 0.5).samples(), t.samples());
    }

    #[test]
    fn percentile_never_increases_values() {
        let t = trace(vec![5.0, 0.5, 9.0, 2.0, 7.5]);
        let out = percentile_threshold(&t, 0.6);
        for (x, y) in t.samples().iter().zip(out.samples()) {
            assert!(y <= x);
        }
    }

    #[test]
    fn truncate_peaks_noop_within_cutoff() {
        let t = trace(vec![1.0, 2.0, 3.0, 2.0, 1.0]);
        assert_eq!(truncate_peaks(&t, 3.0), t);
    }

    #[test]
    fn truncate_peaks_constant_identity() {
        let t = trace(vec![2.0; 4]);
        assert_eq!(truncate_peaks(&t, 1.0), t);
    }

    #[test]
    fn truncate_peaks_clips_and_is_idempotent() {
        let mut samples = vec![100.0; 60];
        for s in samples.iter_mut().take(40).skip(20) {
            *s = 4000.0;
        }
        let t = trace(samples);
        let once = truncate_peaks(&t, 1.0);
        let max = once.samples().iter().cloned().fold(f64::MIN, f64::max);
        assert!(max < 4000.0);
        let twice = truncate_peaks(&once, 1.0);
        // Clipped values already sit within the recomputed bounds only when
        // the second pass reuses them; clipping a clipped trace with frozen
        // statistics changes nothing.
        let n = once.len() as f64;
        let mean = once.samples().iter().sum::<f64>() / n;
        let std =
            (once.samples().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let (lo, hi) = (mean - 1.0 * std, mean + 1.0 * std);
        let refrozen: Vec<f64> = once.samples().iter().map(|x| x.clamp(lo, hi)).collect();
        assert_eq!(twice.samples(), refrozen.as_slice());
    }

    #[test]
    fn pipeline_length_depends_only_on_input_length() {
        let cfg = PreprocessConfig::default();
        let a = trace((0..107).map(|i| (i % 13) as f64).collect());
        let b = trace((0..107).map(|i| ((i * 7) % 23) as f64 * 3.0).collect());
        assert_eq!(preprocess(&a, &cfg).len(), preprocess(&b, &cfg).len());
    }
}
