//! `infer`: particle-filter route inference over a road graph.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use powerpath_core::inference::{build_model, estimate_pair, run_particle_filter};
use powerpath_core::model::{IntersectionId, PowerTrace, ReferenceLibrary, RoadGraph};

use crate::config::RunConfig;

#[derive(Args)]
pub struct InferArgs {
    /// Observed power trace of the unknown drive.
    #[arg(long)]
    observation: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Library directory with per-segment recordings.
    #[arg(long)]
    library: PathBuf,
    /// Known starting intersection of the drive.
    #[arg(long)]
    start: u32,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &InferArgs, cfg: &RunConfig) -> Result<()> {
    let observation = PowerTrace::load_csv(&args.observation)?;
    let graph = RoadGraph::load_json(&args.graph)?;
    let library = ReferenceLibrary::load_dir(&args.library)?;
    library.validate(Some(&graph))?;

    let inference_cfg = cfg.inference.clone();
    let model = build_model(&graph, &library, IntersectionId(args.start), &inference_cfg)?;
    let n = args.particles.unwrap_or(inference_cfg.particles);
    let seed = args.seed.unwrap_or(cfg.seed);
    let max_iterations = args.max_iterations.or(inference_cfg.max_iterations);

    eprintln!(
        "running particle filter: {n} particles over a {:.0} s observation",
        observation.duration()
    );
    let p_final = run_particle_filter(&observation, &model, n, max_iterations, seed)?;
    let (frequent, vote) = estimate_pair(&p_final, &graph)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let routes_csv = format!("decoder,route\nfrequent,{frequent}\nvote,{vote}\n");
    std::fs::write(args.out.join("routes.csv"), routes_csv)?;

    // Histogram of the final population, most frequent first.
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in &p_final {
        if let Some(route) = p.route() {
            *counts.entry(route.to_string()).or_default() += 1;
        }
    }
    let mut ordered: Vec<(String, usize)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut hist = String::from("route,count\n");
    for (route, count) in &ordered {
        hist.push_str(&format!("{route},{count}\n"));
    }
    std::fs::write(args.out.join("histogram.csv"), hist)?;

    println!("frequent,{frequent}");
    println!("vote,{vote}");
    eprintln!(
        "{} distinct routes in the population; outputs in {}",
        ordered.len(),
        args.out.display()
    );
    Ok(())
}
