//! `blockgen fit-gmm`: density estimation over root latents, model selected
//! by decoding samples and scoring them against the training layouts.

use std::path::PathBuf;

use blockgen_core::dataset::Split;
use blockgen_core::latent::{gmm_grid_search, gmm_sample, write_gmm, write_grid_csv, CovarianceType};
use blockgen_core::metrics::{jsd, JSD_DEFAULT_BINS};
use blockgen_core::model::load_checkpoint;
use blockgen_core::Result;

use super::{
    decode_rows, forest_latents, layout_clouds, leaf_layouts, load_split_trees, parse_list, Ctx,
};

#[derive(Debug, clap::Args)]
pub struct GmmArgs {
    /// Trained model checkpoint
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Forest file
    #[arg(long)]
    forest: Option<PathBuf>,
    /// Split manifest; filters the forest together with --split
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// train | val | test
    #[arg(long)]
    split: Option<Split>,
    /// Component counts to try, comma separated
    #[arg(long)]
    components: Option<String>,
    /// Covariance structures to try: full | diag | tied | spherical
    #[arg(long)]
    cov_types: Option<String>,
    /// Occupancy grid resolution per axis for the selection score
    #[arg(long)]
    bins: Option<usize>,
    /// Free-decode depth cap for sampled layouts
    #[arg(long)]
    max_depth: Option<usize>,
    /// Leaf probability above which decoding stops splitting
    #[arg(long)]
    leaf_threshold: Option<f64>,
}

pub fn run(mut ctx: Ctx, args: GmmArgs) -> Result<()> {
    let checkpoint = ctx.resolver.require_path("checkpoint", args.checkpoint)?;
    let forest = ctx.resolver.require_path("forest", args.forest)?;
    let manifest = ctx.resolver.resolve_path("manifest", args.manifest)?;
    let split = ctx.resolver.resolve_opt("split", args.split)?;
    let components_text = ctx
        .resolver
        .resolve("components", args.components, "5".to_string())?;
    let cov_text = ctx
        .resolver
        .resolve("cov-types", args.cov_types, "full".to_string())?;
    let bins = ctx.resolver.resolve("bins", args.bins, JSD_DEFAULT_BINS)?;
    let max_depth = ctx.resolver.resolve("max-depth", args.max_depth, 8)?;
    let leaf_threshold = ctx
        .resolver
        .resolve("leaf-threshold", args.leaf_threshold, 0.5)?;
    let components: Vec<usize> = parse_list("--components", &components_text)?;
    let cov_types: Vec<CovarianceType> = parse_list("--cov-types", &cov_text)?;
    ctx.commit("fit-gmm")?;

    let (model, _) = load_checkpoint(&checkpoint)?;
    let trees = load_split_trees(&forest, manifest.as_deref(), split)?;
    let latents = forest_latents(&model, &trees)?;
    let reference = layout_clouds(&leaf_layouts(&trees))?;
    ctx.log(format!(
        "grid search over {} cells on {} latents",
        components.len() * cov_types.len(),
        latents.rows
    ));
    let search = gmm_grid_search(&latents, &components, &cov_types, ctx.seed, |candidate| {
        let samples = gmm_sample(candidate, trees.len(), ctx.seed)?;
        let decoded = decode_rows(&model, &samples, max_depth, leaf_threshold)?;
        jsd(&reference, &layout_clouds(&decoded)?, bins)
    })?;
    write_gmm(ctx.out.join("gmm.txt"), &search.best)?;
    write_grid_csv(ctx.out.join("grid.csv"), &search.table)?;
    let best = &search.table[search.best_index];
    println!(
        "fit-gmm: best K={} {} (jsd {:.6}) -> {}",
        best.components,
        best.cov_type,
        best.jsd,
        ctx.out.join("gmm.txt").display()
    );
    Ok(())
}
