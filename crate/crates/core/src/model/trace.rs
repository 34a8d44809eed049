//! Uniformly sampled power-consumption time series and their CSV format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::LatLon;

/// A uniformly sampled power series in milliwatts, optionally annotated with
/// per-sample ground-truth coordinates and free-form metadata.
///
/// Raw traces (as recorded or simulated) are nonnegative; traces produced by
/// preprocessing stages (z-normalization in particular) may carry negative
/// values and are constructed through [`PowerTrace::from_processed`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    sample_period: f64,
    samples: Vec<f64>,
    ground_truth: Option<Vec<LatLon>>,
    meta: BTreeMap<String, String>,
}

impl PowerTrace {
    /// Builds a raw trace, enforcing all invariants including nonnegativity.
    pub fn new(
        sample_period: f64,
        samples: Vec<f64>,
        ground_truth: Option<Vec<LatLon>>,
    ) -> Result<Self> {
        if samples.iter().any(|v| *v < 0.0) {
            return Err(Error::invalid("trace", "raw power values must be >= 0"));
        }
        Self::from_processed(sample_period, samples, ground_truth)
    }

    /// Builds a derived trace (output of a preprocessing stage). Values must
    /// be finite but may be negative.
    pub fn from_processed(
        sample_period: f64,
        samples: Vec<f64>,
        ground_truth: Option<Vec<LatLon>>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("trace samples"));
        }
        if !(sample_period > 0.0) || !sample_period.is_finite() {
            return Err(Error::invalid("trace", "sample_period must be positive"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("trace", "power values must be finite"));
        }
        if let Some(gt) = &ground_truth {
            if gt.len() != samples.len() {
                return Err(Error::invalid(
                    "trace",
                    format!(
                        "ground truth length {} != sample count {}",
                        gt.len(),
                        samples.len()
                    ),
                ));
            }
        }
        Ok(PowerTrace {
            sample_period,
            samples,
            ground_truth,
            meta: BTreeMap::new(),
        })
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total duration in seconds; each sample covers one period.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn ground_truth(&self) -> Option<&[LatLon]> {
        self.ground_truth.as_deref()
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Sets a metadata entry. Keys and values must be single-line.
    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let (key, value) = (key.into(), value.into());
        if key.is_empty()
            || key.contains(|c: char| c == '=' || c.is_whitespace())
            || value.contains('\n')
        {
            return Err(Error::invalid(
                "trace meta",
                format!("bad key/value: {key:?}={value:?}"),
            ));
        }
        self.meta.insert(key, value);
        Ok(())
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Result<Self> {
        self.set_meta(key, value)?;
        Ok(self)
    }

    /// Replaces the sample values, keeping period/ground-truth/meta. Used by
    /// value-wise preprocessing stages.
    pub(crate) fn map_samples(&self, samples: Vec<f64>) -> PowerTrace {
        debug_assert_eq!(samples.len(), self.samples.len());
        PowerTrace {
            sample_period: self.sample_period,
            samples,
            ground_truth: self.ground_truth.clone(),
            meta: self.meta.clone(),
        }
    }

    pub(crate) fn replace_parts(
        &self,
        sample_period: f64,
        samples: Vec<f64>,
        ground_truth: Option<Vec<LatLon>>,
    ) -> PowerTrace {
        PowerTrace {
            sample_period,
            samples,
            ground_truth,
            meta: self.meta.clone(),
        }
    }

    /// Writes the canonical CSV form: `# key=value` comment lines (sorted),
    /// a `# sample_period_s=...` line, then `t_s,power_mw[,lat,lon]` rows.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}").unwrap();
        }
        writeln!(out, "# sample_period_s={}", self.sample_period).unwrap();
        match &self.ground_truth {
            Some(gt) => {
                writeln!(out, "t_s,power_mw,lat,lon").unwrap();
                for (i, (p, c)) in self.samples.iter().zip(gt).enumerate() {
                    let t = i as f64 * self.sample_period;
                    writeln!(out, "{t},{p},{},{}", c.lat, c.lon).unwrap();
                }
            }
            None => {
                writeln!(out, "t_s,power_mw").unwrap();
                for (i, p) in self.samples.iter().enumerate() {
                    let t = i as f64 * self.sample_period;
                    writeln!(out, "{t},{p}").unwrap();
                }
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Loads a trace saved by [`save_csv`](Self::save_csv) or any CSV with the
    /// documented header. Without an explicit `# sample_period_s` line the
    /// period is inferred as the median timestamp delta; deltas must agree
    /// with it within 1%.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_csv(&text).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses the CSV trace format from a string.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut explicit_period = None;
        let mut header: Option<Vec<String>> = None;
        let mut times = Vec::new();
        let mut samples = Vec::new();
        let mut coords: Vec<LatLon> = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some((k, v)) = rest.split_once('=') {
                    if k == "sample_period_s" {
                        let p: f64 = v
                            .parse()
                            .map_err(|_| Error::Schema(format!("bad sample_period_s {v:?}")))?;
                        explicit_period = Some(p);
                    } else {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            match &header {
                None => {
                    let h: Vec<String> = fields.iter().map(|s| s.trim().to_string()).collect();
                    if h != ["t_s", "power_mw"] && h != ["t_s", "power_mw", "lat", "lon"] {
                        return Err(Error::Schema(format!(
                            "line {}: header must be t_s,power_mw[,lat,lon], got {:?}",
                            lineno + 1,
                            h.join(",")
                        )));
                    }
                    header = Some(h);
                }
                Some(h) => {
                    if fields.len() != h.len() {
                        return Err(Error::Schema(format!(
                            "line {}: expected {} fields, got {}",
                            lineno + 1,
                            h.len(),
                            fields.len()
                        )));
                    }
                    let parse = |s: &str, what: &str| -> Result<f64> {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Schema(format!("line {}: bad {what} {s:?}", lineno + 1)))
                    };
                    times.push(parse(fields[0], "t_s")?);
                    samples.push(parse(fields[1], "power_mw")?);
                    if h.len() == 4 {
                        let lat = parse(fields[2], "lat")?;
                        let lon = parse(fields[3], "lon")?;
                        coords.push(LatLon::new(lat, lon)?);
                    }
                }
            }
        }

        if samples.is_empty() {
            return Err(Error::Schema("no data rows".into()));
        }
        let period = match explicit_period {
            Some(p) => p,
            None => infer_period(&times)?,
        };
        if !(period > 0.0) {
            return Err(Error::Schema(format!("nonpositive sample period {period}")));
        }
        // Uniformity check against the (explicit or inferred) period.
        for w in times.windows(2) {
            let d = w[1] - w[0];
            if (d - period).abs() > 0.01 * period {
                return Err(Error::Schema(format!(
                    "non-uniform sampling: delta {d} vs period {period}"
                )));
            }
        }
        let ground_truth = if coords.is_empty() { None } else { Some(coords) };
        let mut trace = PowerTrace::new(period, samples, ground_truth)?;
        trace.meta = meta;
        Ok(trace)
    }
}

fn infer_period(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Schema(
            "cannot infer sample period from a single row; add a # sample_period_s line".into(),
        ));
    }
    let mut deltas: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(deltas[deltas.len() / 2])
}

/// Returns the sub-trace covering `[t_start, t_end)`, rounded outward to
/// sample boundaries: the sample containing `t_start` is included, the sample
/// starting exactly at `t_end` is excluded, so consecutive slices tile.
/// The result's timestamps restart at zero.
pub fn slice_trace(trace: &PowerTrace, t_start: f64, t_end: f64) -> Result<PowerTrace> {
    if !(t_start >= 0.0) || !(t_end > t_start) {
        return Err(Error::invalid(
            "slice interval",
            format!("need 0 <= t_start < t_end, got [{t_start}, {t_end}]"),
        ));
    }
    let duration = trace.duration();
    if t_end > duration * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::invalid(
            "slice interval",
            format!("t_end {t_end} exceeds trace duration {duration}"),
        ));
    }
    let p = trace.sample_period();
    let n = trace.len();
    // Tolerance absorbs accumulated float error in boundary times that are
    // sums of period multiples.
    let start = ((t_start / p) + 1e-9).floor() as usize;
    let end = (((t_end / p) - 1e-9).ceil() as usize).min(n);
    let start = start.min(n.saturating_sub(1));
    if end <= start {
        return Err(Error::invalid(
            "slice interval",
            format!("interval [{t_start}, {t_end}] selects no samples"),
        ));
    }
    let samples = trace.samples()[start..end].to_vec();
    let ground_truth = trace.ground_truth().map(|gt| gt[start..end].to_vec());
    Ok(trace.replace_parts(p, samples, ground_truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(n: usize, period: f64) -> PowerTrace {
        PowerTrace::new(period, (0..n).map(|i| i as f64).collect(), None).unwrap()
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(PowerTrace::new(1.0, vec![], None).is_err());
        assert!(PowerTrace::new(0.0, vec![1.0], None).is_err());
        assert!(PowerTrace::new(1.0, vec![-1.0], None).is_err());
        assert!(PowerTrace::new(1.0, vec![f64::NAN], None).is_err());
        let gt = vec![LatLon::new(0.0, 0.0).unwrap()];
        assert!(PowerTrace::new(1.0, vec![1.0, 2.0], Some(gt)).is_err());
    }

    #[test]
    fn processed_allows_negative() {
        assert!(PowerTrace::from_processed(1.0, vec![-1.0, 1.0], None).is_ok());
    }

    #[test]
    fn slice_full_duration_is_identity() {
        let t = trace(10, 1.0);
        let s = slice_trace(&t, 0.0, 10.0).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn slice_half_open_boundary() {
        let t = trace(100, 1.0);
        let s = slice_trace(&t, 10.0, 20.0).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.samples()[0], 10.0);
        assert_eq!(s.samples()[9], 19.0);
    }

    #[test]
    fn slice_rounds_outward() {
        let t = trace(100, 1.0);
        let s = slice_trace(&t, 10.5, 20.5).unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s.samples()[0], 10.0);
        assert_eq!(s.samples()[10], 20.0);
    }

    #[test]
    fn slice_is_idempotent_over_full_result() {
        let t = trace(100, 0.1);
        let s = slice_trace(&t, 1.0, 4.0).unwrap();
        let s2 = slice_trace(&s, 0.0, s.duration()).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn slices_tile_without_overlap() {
        let t = trace(30, 0.1);
        let a = slice_trace(&t, 0.0, 1.0).unwrap();
        let b = slice_trace(&t, 1.0, 2.0).unwrap();
        let c = slice_trace(&t, 2.0, 3.0).unwrap();
        let mut joined = a.samples().to_vec();
        joined.extend_from_slice(b.samples());
        joined.extend_from_slice(c.samples());
        assert_eq!(joined, t.samples());
    }

    #[test]
    fn slice_rejects_bad_intervals() {
        let t = trace(10, 1.0);
        assert!(slice_trace(&t, 5.0, 5.0).is_err());
        assert!(slice_trace(&t, 6.0, 5.0).is_err());
        assert!(slice_trace(&t, 0.0, 11.5).is_err());
        assert!(slice_trace(&t, -1.0, 5.0).is_err());
    }

    #[test]
    fn csv_round_trip_exact() {
        let gt: Vec<LatLon> = (0..5)
            .map(|i| LatLon::new(37.0 + i as f64 * 1e-4, -122.0).unwrap())
            .collect();
        let t = PowerTrace::new(0.1, vec![800.0, 812.5, 790.25, 805.0, 808.125], Some(gt))
            .unwrap()
            .with_meta("device", "simulated")
            .unwrap()
            .with_meta("route", "a-b")
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.save_csv(&path).unwrap();
        let back = PowerTrace::load_csv(&path).unwrap();
        assert_eq!(t, back);
        // Canonical serialization of equal values is byte-identical.
        let path2 = dir.path().join("t2.csv");
        back.save_csv(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn csv_infers_period_without_explicit_line() {
        let text = "t_s,power_mw\n0,800\n0.5,810\n1.0,820\n1.5,830\n";
        let t = PowerTrace::parse_csv(text).unwrap();
        assert_eq!(t.sample_period(), 0.5);
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn csv_rejects_non_uniform_sampling() {
        let text = "t_s,power_mw\n0,800\n1,810\n2.5,820\n3.5,830\n";
        assert!(matches!(
            PowerTrace::parse_csv(text),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn csv_rejects_bad_header() {
        let text = "time,watts\n0,800\n";
        assert!(matches!(PowerTrace::parse_csv(text), Err(Error::Schema(_))));
    }
}
