//! Single entry point for the power-trace location-inference pipeline.
//! Subcommands generate synthetic worlds, libraries, and drives; condition
//! traces; compute alignment distances; classify, track, and infer routes;
//! and assemble metric reports. All randomness flows from explicit seeds and
//! reruns are byte-identical; progress goes to stderr, data to stdout or the
//! `--out` target.

mod analyze;
mod config;
mod gen;
mod infer;
mod report;
mod track;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "powerpath",
    version,
    about = "Location inference from aggregate power-consumption traces"
)]
struct Cli {
    /// Worker threads for the parallel stages (default: available cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// TOML run configuration; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic inputs (worlds, reference libraries, drives).
    #[command(subcommand)]
    Gen(gen::GenCommand),
    /// Run the conditioning pipeline over one trace.
    Preprocess(analyze::PreprocessArgs),
    /// Alignment distance between two traces (debugging aid).
    Dist(analyze::DistArgs),
    /// 1-NN route classification of a query trace.
    Classify(analyze::ClassifyArgs),
    /// Cross-validated identification-rate table row.
    Xval(analyze::XvalArgs),
    /// Real-time tracking of a power stream along known routes.
    Track(track::TrackArgs),
    /// Unseen-route inference over a road graph.
    Infer(infer::InferArgs),
    /// Assemble metric reports from per-scenario outputs.
    #[command(subcommand)]
    Report(report::ReportCommand),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error kind=config message=\"could not set --jobs: {e}\"");
            return ExitCode::from(1);
        }
    }
    let result = run(&cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = classify_error(&err);
            eprintln!("error kind={kind} message=\"{err:#}\"");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config::RunConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Gen(cmd) => gen::run(cmd, &cfg),
        Command::Preprocess(args) => analyze::preprocess(args, &cfg),
        Command::Dist(args) => analyze::dist(args, &cfg),
        Command::Classify(args) => analyze::classify(args, &cfg),
        Command::Xval(args) => analyze::xval(args, &cfg),
        Command::Track(args) => track::run(args, &cfg),
        Command::Infer(args) => infer::run(args, &cfg),
        Command::Report(cmd) => report::run(cmd, &cfg),
    }
}

/// Exit codes: 2 missing/unreadable files, 3 schema or validation
/// violations, 4 uncovered segment triples, 5 model/observation mismatch,
/// 1 anything else.
fn classify_error(err: &anyhow::Error) -> (u8, &'static str) {
    use powerpath_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } => (2, "io"),
                E::UncoveredTriples { .. } => (4, "coverage"),
                E::Mismatch(_) => (5, "mismatch"),
                E::Csv { .. }
                | E::Json { .. }
                | E::Schema(_)
                | E::Invalid { .. }
                | E::RouteViolation { .. }
                | E::CoordinateRange { .. }
                | E::EmptyInput(_) => (3, "schema"),
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (2, "io");
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return (3, "schema");
        }
    }
    (1, "other")
}
