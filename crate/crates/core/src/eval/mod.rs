//! Metric suite: route edit distance, destination localization, random
//! feasible-route baselines, tracking-error distributions, and report
//! assembly.

mod levenshtein;
mod report;

pub use levenshtein::levenshtein_routes;
pub use report::{
    destination_hit, random_route_baseline, route_inference_report, tracking_error_report,
    BaselineStats, InferenceOutcome, TrackingReport,
};

/// One metric row of a report: a value, an optional baseline for the same
/// metric, and the number of scored items behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub value: f64,
    pub baseline: Option<f64>,
    pub n: usize,
}

/// A named bundle of metric rows plus raw series for plotting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub scenario: String,
    pub rows: Vec<MetricRow>,
    /// Named (x, y) series, e.g. error-vs-time or an error CDF.
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

impl EvalReport {
    /// Rows as CSV with a `metric,value,baseline,n` header. Baselines render
    /// empty when absent.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("metric,value,baseline,n\n");
        for row in &self.rows {
            let baseline = row.baseline.map(|b| b.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", row.name, row.value, baseline, row.n));
        }
        out
    }

    /// One series as gnuplot-friendly two-column CSV.
    pub fn series_csv(&self, name: &str) -> Option<String> {
        let (_, points) = self.series.iter().find(|(n, _)| n == name)?;
        let mut out = String::from("x,y\n");
        for (x, y) in points {
            out.push_str(&format!("{x},{y}\n"));
        }
        Some(out)
    }
}
