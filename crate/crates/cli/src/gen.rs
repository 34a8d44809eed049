//! `gen world | library | drive`: synthetic-input generation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use powerpath_core::model::{RoadGraph, Route};
use powerpath_core::synth::{
    build_reference_library, fixtures, simulate_drive, DrivePlan, LibrarySpec, World, WorldConfig,
};

use crate::config::RunConfig;

#[derive(Subcommand)]
pub enum GenCommand {
    /// Write a preset world (world.toml, graph.json, routes.json).
    World(WorldArgs),
    /// Record a reference library (whole routes and/or segment triples).
    Library(LibraryArgs),
    /// Simulate one drive and write its ground-truthed trace.
    Drive(DriveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Preset {
    /// Four intersections on a square with a diagonal.
    Tiny4,
    /// 3x3 grid with eight labeled routes.
    Routes8,
    /// 13 intersections, 35 segments, four long test tracks.
    Grid13,
}

#[derive(Args)]
pub struct WorldArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    #[arg(long)]
    out: PathBuf,
    /// Override the preset's world seed (freezes the shadow fields).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct LibraryArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// routes.json with labeled whole routes to record; omit for a
    /// segment-only library.
    #[arg(long)]
    routes: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    route_reps: Option<usize>,
    #[arg(long)]
    segment_reps: Option<usize>,
}

#[derive(Args)]
pub struct DriveArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Route as hyphen-separated intersection ids, e.g. 8-5-6-7.
    #[arg(long)]
    route: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Constant speed in m/s instead of randomized kinematics.
    #[arg(long)]
    speed: Option<f64>,
    /// Override the world's transient-event rate (events per second).
    #[arg(long)]
    transient_rate: Option<f64>,
    /// Also write the per-segment boundary times as CSV.
    #[arg(long)]
    boundaries_out: Option<PathBuf>,
}

pub fn run(cmd: &GenCommand, cfg: &RunConfig) -> Result<()> {
    match cmd {
        GenCommand::World(args) => world(args),
        GenCommand::Library(args) => library(args, cfg),
        GenCommand::Drive(args) => drive(args, cfg),
    }
}

pub fn load_world(path: &Path) -> Result<World> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| powerpath_core::Error::Io {
            path: path.display().to_string(),
            source: e,
        })
        .context("reading world config")?;
    let config: WorldConfig = toml::from_str(&text)
        .with_context(|| format!("parsing world config {}", path.display()))?;
    Ok(World::new(config)?)
}

pub fn load_routes(path: &Path) -> Result<BTreeMap<String, Route>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| powerpath_core::Error::Io {
            path: path.display().to_string(),
            source: e,
        })
        .context("reading routes file")?;
    let raw: BTreeMap<String, Vec<u32>> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut routes = BTreeMap::new();
    for (label, ids) in raw {
        let route = Route::new(
            ids.into_iter()
                .map(powerpath_core::IntersectionId)
                .collect(),
        )?;
        routes.insert(label, route);
    }
    Ok(routes)
}

fn save_routes(path: &Path, routes: &BTreeMap<String, Route>) -> Result<()> {
    let raw: BTreeMap<&String, Vec<u32>> = routes
        .iter()
        .map(|(label, route)| {
            (
                label,
                route.intersections().iter().map(|id| id.0).collect(),
            )
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&raw)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn world(args: &WorldArgs) -> Result<()> {
    let (world, graph, routes) = match args.preset {
        Preset::Tiny4 => {
            let (world, graph) = fixtures::tiny4();
            // Two sample drives through the square for quick experiments.
            let routes: BTreeMap<String, Route> = [
                ("a".to_string(), Route::parse("1-2-3-4")?),
                ("b".to_string(), Route::parse("1-4-2-3")?),
            ]
            .into();
            (world, graph, routes)
        }
        Preset::Routes8 => {
            let (world, graph, routes) = fixtures::routes8();
            (world, graph, routes)
        }
        Preset::Grid13 => {
            let (world, graph) = fixtures::grid13();
            let routes: BTreeMap<String, Route> = fixtures::grid13_tracks()
                .into_iter()
                .enumerate()
                .map(|(i, r)| (format!("t{}", i + 1), r))
                .collect();
            (world, graph, routes)
        }
    };
    let mut config = world.config;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let world_path = args.out.join("world.toml");
    std::fs::write(&world_path, toml::to_string_pretty(&config)?)
        .with_context(|| format!("writing {}", world_path.display()))?;
    graph.save_json(args.out.join("graph.json"))?;
    save_routes(&args.out.join("routes.json"), &routes)?;
    eprintln!("wrote world.toml, graph.json, routes.json to {}", args.out.display());
    Ok(())
}

fn library(args: &LibraryArgs, cfg: &RunConfig) -> Result<()> {
    let world = load_world(&args.world)?;
    let graph = RoadGraph::load_json(&args.graph)?;
    let routes = match &args.routes {
        Some(path) => {
            let routes = load_routes(path)?;
            for route in routes.values() {
                powerpath_core::validate_route(&graph, route)?;
            }
            routes
        }
        None => BTreeMap::new(),
    };
    let spec = LibrarySpec {
        route_reps: if routes.is_empty() {
            0
        } else {
            args.route_reps.unwrap_or(cfg.library.route_reps)
        },
        segment_reps: args.segment_reps.unwrap_or(cfg.library.segment_reps),
        routes,
        seed: args.seed.unwrap_or(cfg.seed),
    };
    if spec.routes.is_empty() && spec.segment_reps == 0 {
        bail!("nothing to record: no routes file and segment_reps = 0");
    }
    let lib = build_reference_library(&world, &graph, &spec)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    lib.save_dir(&args.out)?;
    eprintln!(
        "recorded {} route labels, {} segment triples to {}",
        lib.entries.len(),
        lib.segment_entries.len(),
        args.out.display()
    );
    Ok(())
}

fn drive(args: &DriveArgs, cfg: &RunConfig) -> Result<()> {
    let mut world = load_world(&args.world)?;
    if let Some(rate) = args.transient_rate {
        world.config.noise.transient_rate_hz = rate;
        world = World::new(world.config)?;
    }
    let graph = RoadGraph::load_json(&args.graph)?;
    let route = Route::parse(&args.route)?;
    powerpath_core::validate_route(&graph, &route)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let plan = match args.speed {
        Some(speed) => DrivePlan::constant(route, speed, seed),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            DrivePlan::sample(route, &world.config.kinematics, &mut rng)
        }
    };
    let rec = simulate_drive(&world, &graph, &plan)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    rec.trace.save_csv(&args.out)?;
    if let Some(bpath) = &args.boundaries_out {
        let mut text = String::from("segment_index,end_s\n");
        for (i, t) in rec.boundary_times.iter().enumerate() {
            text.push_str(&format!("{i},{t}\n"));
        }
        std::fs::write(bpath, text).with_context(|| format!("writing {}", bpath.display()))?;
    }
    eprintln!(
        "simulated {:.0} s drive ({} samples) to {}",
        rec.trace.duration(),
        rec.trace.len(),
        args.out.display()
    );
    Ok(())
}
