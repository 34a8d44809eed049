//! `report tracking | inference`: merge per-scenario outputs into metric
//! tables.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};

use powerpath_core::eval::{route_inference_report, InferenceOutcome, TrackingReport};
use powerpath_core::model::{RoadGraph, Route};

use crate::config::RunConfig;

#[derive(Subcommand)]
pub enum ReportCommand {
    /// Error statistics for one tracking run (reads the `track` output).
    Tracking(TrackingReportArgs),
    /// Destination / edit-distance / exact-fit table for route inference.
    Inference(InferenceReportArgs),
}

#[derive(Args)]
pub struct TrackingReportArgs {
    /// Per-tick estimates CSV produced by `track` (must carry error_m).
    #[arg(long)]
    estimates: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Absolute error bound in meters; overrides the fractional bound.
    #[arg(long)]
    bound_m: Option<f64>,
    /// Route length for the fractional bound (bound = bound_frac * length).
    #[arg(long)]
    route_length_m: Option<f64>,
}

#[derive(Args)]
pub struct InferenceReportArgs {
    /// CSV with header track_id,truth,frequent,vote; routes in 1-2-3 form.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Monte Carlo trials per track for the random baseline.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(cmd: &ReportCommand, cfg: &RunConfig) -> Result<()> {
    match cmd {
        ReportCommand::Tracking(args) => tracking(args, cfg),
        ReportCommand::Inference(args) => inference(args, cfg),
    }
}

/// (tick time, recorded error) pairs from a `track` output file.
fn parse_estimates(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| powerpath_core::Error::Io {
            path: path.display().to_string(),
            source: e,
        })
        .context("reading estimates")?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "t_s,label,end_offset,lat,lon,score,corrected,error_m" {
                bail!(powerpath_core::Error::Schema(format!(
                    "{}: unexpected header {line:?}",
                    path.display()
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!(powerpath_core::Error::Schema(format!(
                "{} line {}: expected 8 fields",
                path.display(),
                i + 1
            )));
        }
        if fields[7].is_empty() {
            bail!(powerpath_core::Error::Schema(format!(
                "{} line {}: empty error_m; track a stream with ground truth",
                path.display(),
                i + 1
            )));
        }
        let f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .with_context(|| format!("bad number {s:?} at line {}", i + 1))
        };
        rows.push((f(fields[0])?, f(fields[7])?));
    }
    if rows.is_empty() {
        bail!(powerpath_core::Error::Schema("no estimate rows".into()));
    }
    Ok(rows)
}

fn tracking(args: &TrackingReportArgs, cfg: &RunConfig) -> Result<()> {
    let rows = parse_estimates(&args.estimates)?;
    let bound_m = match (args.bound_m, args.route_length_m) {
        (Some(b), _) => b,
        (None, Some(len)) => cfg.eval.bound_frac * len,
        (None, None) => bail!(
            "need --bound-m or --route-length-m (fractional bound {} of route length)",
            cfg.eval.bound_frac
        ),
    };
    let errors_m: Vec<f64> = rows.iter().map(|&(_, e)| e).collect();
    let below = errors_m.iter().filter(|&&e| e < bound_m).count();
    let dwell = cfg.eval.dwell_ticks.max(1);
    let convergence_tick = (0..errors_m.len().saturating_sub(dwell - 1))
        .find(|&i| errors_m[i..i + dwell].iter().all(|&e| e < bound_m));
    let report = TrackingReport {
        fraction_below: below as f64 / errors_m.len() as f64,
        errors_m,
        bound_m,
        convergence_tick,
    };

    let times: Vec<f64> = rows.iter().map(|&(t, _)| t).collect();
    let eval = report.to_report("tracking", &times);
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("metrics.csv"), eval.rows_csv())?;
    std::fs::write(
        args.out.join("error_vs_time.csv"),
        eval.series_csv("error_vs_time").unwrap(),
    )?;
    std::fs::write(
        args.out.join("error_cdf.csv"),
        eval.series_csv("error_cdf").unwrap(),
    )?;
    eprintln!(
        "fraction below {bound_m} m: {:.3}; outputs in {}",
        report.fraction_below,
        args.out.display()
    );
    Ok(())
}

fn inference(args: &InferenceReportArgs, cfg: &RunConfig) -> Result<()> {
    let text = std::fs::read_to_string(&args.results)
        .map_err(|e| powerpath_core::Error::Io {
            path: args.results.display().to_string(),
            source: e,
        })
        .context("reading results")?;
    let graph = RoadGraph::load_json(&args.graph)?;
    let mut outcomes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "track_id,truth,frequent,vote" {
                bail!(powerpath_core::Error::Schema(format!(
                    "unexpected header {line:?}; want track_id,truth,frequent,vote"
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bail!(powerpath_core::Error::Schema(format!(
                "line {}: expected 4 fields",
                i + 1
            )));
        }
        outcomes.push(InferenceOutcome {
            truth: Route::parse(fields[1])?,
            frequent: Route::parse(fields[2])?,
            vote: Route::parse(fields[3])?,
        });
    }
    if outcomes.is_empty() {
        bail!(powerpath_core::Error::Schema("no result rows".into()));
    }
    let trials = args.trials.unwrap_or(cfg.eval.baseline_trials);
    let seed = args.seed.unwrap_or(cfg.seed);
    let report = route_inference_report(&outcomes, &graph, trials, seed)?;

    // Table layout: one row per metric, decoders as columns.
    let get = |name: &str| {
        report
            .rows
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
            .expect("report emits all rows")
    };
    let mut table = String::from("metric,random,frequent,vote,combined\n");
    for metric in ["destination_rate", "mean_normalized_distance", "exact_fit_rate"] {
        table.push_str(&format!(
            "{metric},{},{},{},{}\n",
            get(&format!("{metric}/random")),
            get(&format!("{metric}/frequent")),
            get(&format!("{metric}/vote")),
            get(&format!("{metric}/combined")),
        ));
    }
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("metrics.csv"), &table)?;
    print!("{table}");
    eprintln!(
        "{} tracks scored; outputs in {}",
        outcomes.len(),
        args.out.display()
    );
    Ok(())
}
