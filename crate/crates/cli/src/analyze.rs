//! `preprocess`, `dist`, `classify`, `xval`.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use powerpath_core::classifier;
use powerpath_core::model::{PowerTrace, ReferenceLibrary};
use powerpath_core::preprocess::preprocess as run_pipeline;
use powerpath_core::similarity::{
    default_jump_cost, dtw_distance, normalized_dtw, osb, subsequence_dtw, subsequence_osb,
};

use crate::config::RunConfig;

#[derive(Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn preprocess(args: &PreprocessArgs, cfg: &RunConfig) -> Result<()> {
    let trace = PowerTrace::load_csv(&args.input)?;
    let out = run_pipeline(&trace, &cfg.preprocess);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    out.save_csv(&args.out)?;
    eprintln!(
        "{} samples in, {} out (period {} s)",
        trace.len(),
        out.len(),
        out.sample_period()
    );
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Metric {
    /// Full DTW distance.
    Dtw,
    /// DTW distance normalized by warping-path length.
    Ndtw,
    /// Subsequence DTW of a inside b, with window offsets.
    Subseq,
    /// Optimal subsequence bijection (symmetric jump costs).
    Osb,
    /// OSB with free target head/tail, as used by the tracker.
    Subosb,
}

#[derive(Args)]
pub struct DistArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value = "ndtw")]
    metric: Metric,
    /// Jump cost for the OSB metrics; default is the per-pair statistical
    /// heuristic (mean + std of pairwise costs).
    #[arg(long)]
    jump_cost: Option<f64>,
    /// Compare raw samples instead of preprocessed ones.
    #[arg(long)]
    raw: bool,
}

pub fn dist(args: &DistArgs, cfg: &RunConfig) -> Result<()> {
    let load = |path: &PathBuf| -> Result<Vec<f64>> {
        let trace = PowerTrace::load_csv(path)?;
        Ok(if args.raw {
            trace.samples().to_vec()
        } else {
            run_pipeline(&trace, &cfg.preprocess).samples().to_vec()
        })
    };
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    println!("metric,distance,normalized,start_offset,end_offset,matched");
    let line = |name: &str, d: f64, n: f64, s: Option<usize>, e: Option<usize>, m: usize| {
        let fmt = |o: Option<usize>| o.map(|v| v.to_string()).unwrap_or_default();
        println!("{name},{d},{n},{},{},{m}", fmt(s), fmt(e));
    };
    match args.metric {
        Metric::Dtw => {
            let al = dtw_distance(&a, &b)?;
            line("dtw", al.distance, al.normalized_distance(), al.start_offset, al.end_offset, al.path.len());
        }
        Metric::Ndtw => {
            let al = dtw_distance(&a, &b)?;
            line("ndtw", al.distance, normalized_dtw(&a, &b)?, al.start_offset, al.end_offset, al.path.len());
        }
        Metric::Subseq => {
            let al = subsequence_dtw(&a, &b)?;
            line("subseq", al.distance, al.normalized_distance(), al.start_offset, al.end_offset, al.path.len());
        }
        Metric::Osb => {
            let jc = args.jump_cost.unwrap_or_else(|| default_jump_cost(&a, &b));
            let al = osb(&a, &b, jc)?;
            line("osb", al.distance, al.normalized_distance(), al.start_offset, al.end_offset, al.path.len());
        }
        Metric::Subosb => {
            let jc = args.jump_cost.unwrap_or_else(|| default_jump_cost(&a, &b));
            let al = subsequence_osb(&a, &b, jc)?;
            line("subosb", al.distance, al.normalized_distance(), al.start_offset, al.end_offset, al.path.len());
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    library: PathBuf,
}

pub fn classify(args: &ClassifyArgs, cfg: &RunConfig) -> Result<()> {
    let query = PowerTrace::load_csv(&args.query)?;
    let library = ReferenceLibrary::load_dir(&args.library)?;
    let result = classifier::classify_route(&query, &library, &cfg.preprocess)?;
    println!("# predicted={} margin={}", result.predicted_label, result.margin);
    println!("label,score");
    for (label, score) in &result.per_label_scores {
        println!("{label},{score}");
    }
    Ok(())
}

#[derive(Args)]
pub struct XvalArgs {
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    refs_per_route: usize,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn xval(args: &XvalArgs, cfg: &RunConfig) -> Result<()> {
    let library = ReferenceLibrary::load_dir(&args.library)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let row = classifier::cross_validate(
        &library,
        &cfg.preprocess,
        args.refs_per_route,
        args.iterations,
        seed,
    )?;
    println!("# note=training balanced per class; test pool is all remaining profiles");
    println!("unique_routes,refs_per_route,num_test,correct_pct,random_guess_pct");
    println!(
        "{},{},{},{},{}",
        row.unique_routes,
        row.refs_per_route,
        row.num_test,
        row.correct_fraction * 100.0,
        row.random_guess_fraction * 100.0
    );
    Ok(())
}
