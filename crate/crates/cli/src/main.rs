//! Command-line front end for the block-layout pipeline: synthesize or
//! ingest buildings, build merge trees, train the autoencoder, fit a latent
//! mixture, then generate, inspect, and export layouts.

mod commands;
mod config;
mod par;
mod render;

use std::path::PathBuf;

use blockgen_core::Error;
use clap::Parser;

use commands::Ctx;

#[derive(Debug, clap::Args)]
pub struct Globals {
    /// RNG seed; every stage is deterministic given its inputs and seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Optional `key = value` defaults file
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for per-set stages
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Progress chatter on stderr
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Parser)]
#[command(
    name = "blockgen",
    version,
    about = "Generative modeling of city-block layouts",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Write a synthetic jittered-grid buildings file
    Synth(commands::synth::SynthArgs),
    /// Buildings file -> normalized layout sets and a split manifest
    Ingest(commands::ingest::IngestArgs),
    /// Layout sets -> binary merge trees
    BuildTrees(commands::trees::TreesArgs),
    /// Fit the tree autoencoder on a forest
    Train(commands::train::TrainArgs),
    /// Encode/decode a forest and score the rebuilt layouts
    Reconstruct(commands::reconstruct::ReconstructArgs),
    /// Fit a Gaussian mixture over root latents, selecting K and structure
    FitGmm(commands::gmm::GmmArgs),
    /// Sample the mixture and free-decode new layouts
    Generate(commands::generate::GenerateArgs),
    /// Decode the latent line between two encoded layouts
    Interpolate(commands::interpolate::InterpolateArgs),
    /// Label layouts by latent cluster and profile each cluster
    Cluster(commands::cluster::ClusterArgs),
    /// Render layout sets to SVG footprints or OBJ meshes
    Export(commands::export::ExportArgs),
}

/// Stable scripting contract: 2 bad usage, 3 malformed file, 4 diverged
/// training, 5 I/O failure. (Clap's own usage errors also exit 2.)
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::DegenerateShape(_) | Error::DegenerateParent(_) => 2,
        Error::Schema { .. } => 3,
        Error::TrainingDiverged(_) => 4,
        Error::Io(_) => 5,
    }
}

fn run(cli: Cli) -> blockgen_core::Result<()> {
    let ctx = Ctx::new(&cli.globals)?;
    match cli.command {
        Command::Synth(args) => commands::synth::run(ctx, args),
        Command::Ingest(args) => commands::ingest::run(ctx, args),
        Command::BuildTrees(args) => commands::trees::run(ctx, args),
        Command::Train(args) => commands::train::run(ctx, args),
        Command::Reconstruct(args) => commands::reconstruct::run(ctx, args),
        Command::FitGmm(args) => commands::gmm::run(ctx, args),
        Command::Generate(args) => commands::generate::run(ctx, args),
        Command::Interpolate(args) => commands::interpolate::run(ctx, args),
        Command::Cluster(args) => commands::cluster::run(ctx, args),
        Command::Export(args) => commands::export::run(ctx, args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("blockgen: {e}");
        std::process::exit(exit_code(&e));
    }
}
