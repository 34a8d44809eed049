//! `track`: serially feed a power stream to the tracker and emit per-tick
//! estimates.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use powerpath_core::model::{PowerTrace, ReferenceLibrary};
use powerpath_core::tracker::{run_tracking, Matcher, TrackerConfig};

use crate::config::RunConfig;

#[derive(Clone, Copy, ValueEnum)]
pub enum Variant {
    /// Raw subsequence-DTW estimates.
    PlainDtw,
    /// Subsequence DTW with the lock-state motion model.
    MotionDtw,
    /// Raw subsequence-OSB estimates.
    PlainOsb,
    /// Subsequence OSB with the lock-state motion model.
    MotionOsb,
}

#[derive(Args)]
pub struct TrackArgs {
    /// Stream CSV; with lat/lon columns the output includes per-tick errors.
    #[arg(long)]
    stream: PathBuf,
    /// Reference-library directory (whole-route recordings with
    /// coordinates).
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
}

pub fn run(args: &TrackArgs, cfg: &RunConfig) -> Result<()> {
    let stream = PowerTrace::load_csv(&args.stream)?;
    let library = ReferenceLibrary::load_dir(&args.library)?;
    let mut tracker_cfg: TrackerConfig = cfg.tracker.clone();
    if let Some(variant) = args.variant {
        let (motion, matcher) = match variant {
            Variant::PlainDtw => (false, Matcher::Dtw),
            Variant::MotionDtw => (true, Matcher::Dtw),
            Variant::PlainOsb => (false, Matcher::Osb),
            Variant::MotionOsb => (true, Matcher::Osb),
        };
        tracker_cfg.motion_model = motion;
        tracker_cfg.matcher = matcher;
    }
    let ticks = run_tracking(&stream, &library, &tracker_cfg)?;

    let mut out = String::from("t_s,label,end_offset,lat,lon,score,corrected,error_m\n");
    for tick in &ticks {
        let e = &tick.estimate;
        let error = tick.error_m.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            tick.t_s,
            e.route_label,
            e.end_offset,
            e.position.lat,
            e.position.lon,
            e.score,
            u8::from(e.corrected),
            error
        ));
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("{} ticks to {}", ticks.len(), args.out.display());
    Ok(())
}
