//! `blockgen generate`: sample the latent mixture and free-decode layouts.

use std::path::PathBuf;

use blockgen_core::forest_io::{read_forest, write_layout_sets};
use blockgen_core::latent::{gmm_sample, read_gmm};
use blockgen_core::metrics::{coverage, jsd, mmd, MetricReport, JSD_DEFAULT_BINS};
use blockgen_core::model::load_checkpoint;
use blockgen_core::tree::LayoutSet;
use blockgen_core::{Error, Result};

use super::{decode_rows, layout_clouds, leaf_layouts, mean_oar, write_report, Ctx};

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    /// Trained model checkpoint
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Fitted mixture file
    #[arg(long)]
    gmm: Option<PathBuf>,
    /// Layouts to sample
    #[arg(long)]
    n: Option<usize>,
    /// Free-decode depth cap
    #[arg(long)]
    max_depth: Option<usize>,
    /// Leaf probability above which decoding stops splitting
    #[arg(long)]
    leaf_threshold: Option<f64>,
    /// Reference forest; adds distribution metrics to the report
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Occupancy grid resolution per axis
    #[arg(long)]
    bins: Option<usize>,
}

pub fn run(mut ctx: Ctx, args: GenerateArgs) -> Result<()> {
    let checkpoint = ctx.resolver.require_path("checkpoint", args.checkpoint)?;
    let gmm_path = ctx.resolver.require_path("gmm", args.gmm)?;
    let n = ctx.resolver.resolve("n", args.n, 20)?;
    let max_depth = ctx.resolver.resolve("max-depth", args.max_depth, 8)?;
    let leaf_threshold = ctx
        .resolver
        .resolve("leaf-threshold", args.leaf_threshold, 0.5)?;
    let reference = ctx.resolver.resolve_path("reference", args.reference)?;
    let bins = ctx.resolver.resolve("bins", args.bins, JSD_DEFAULT_BINS)?;
    if n == 0 {
        return Err(Error::invalid("--n must be at least 1"));
    }
    ctx.commit("generate")?;

    let (model, _) = load_checkpoint(&checkpoint)?;
    let mixture = read_gmm(&gmm_path)?;
    if mixture.dim() != 2 * model.hidden() {
        return Err(Error::invalid(format!(
            "mixture dimension {} does not match the model latent size {}",
            mixture.dim(),
            2 * model.hidden()
        )));
    }
    let samples = gmm_sample(&mixture, n, ctx.seed)?;
    let layouts = decode_rows(&model, &samples, max_depth, leaf_threshold)?;

    let mut report = MetricReport {
        oar: Some(mean_oar(&layouts)?),
        ..MetricReport::default()
    };
    if let Some(reference) = reference {
        let trees = read_forest(&reference)?;
        let truth = layout_clouds(&leaf_layouts(&trees))?;
        let generated = layout_clouds(&layouts)?;
        report.jsd = Some(jsd(&truth, &generated, bins)?);
        report.cov = Some(coverage(&truth, &generated)?);
        report.mmd = Some(mmd(&truth, &generated)?);
    }

    let mut sets = Vec::with_capacity(layouts.len());
    for (i, layout) in layouts.iter().enumerate() {
        sets.push(LayoutSet::new(format!("gen{i:04}"), layout.clone())?);
    }
    write_layout_sets(ctx.out.join("layouts.txt"), &sets)?;
    write_report(&ctx.out, &report)?;
    println!(
        "generate: {n} layouts, oar {:.6} -> {}",
        report.oar.unwrap(),
        ctx.out.join("layouts.txt").display()
    );
    Ok(())
}
