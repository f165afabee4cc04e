//! `blockgen reconstruct`: encode each tree, decode it teacher-forced, and
//! score the rebuilt leaves against the originals.

use std::path::PathBuf;

use blockgen_core::dataset::Split;
use blockgen_core::metrics::{chamfer, emd, layout_to_points, MetricReport, PointMode};
use blockgen_core::model::{
    decode_teacher_forced, encode_tree, load_checkpoint, reconstructed_leaves,
};
use blockgen_core::forest_io::write_layout_sets;
use blockgen_core::geometry::Cuboid;
use blockgen_core::tree::LayoutSet;
use blockgen_core::Result;

use super::{load_split_trees, mean_oar, write_report, Ctx};
use crate::par::par_map;
use crate::render::{write_svg, Layer};

#[derive(Debug, clap::Args)]
pub struct ReconstructArgs {
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
}

pub fn run(mut ctx: Ctx, args: ReconstructArgs) -> Result<()> {
    let checkpoint = ctx.resolver.require_path("checkpoint", args.checkpoint)?;
    let forest = ctx.resolver.require_path("forest", args.forest)?;
    let manifest = ctx.resolver.resolve_path("manifest", args.manifest)?;
    let split = ctx.resolver.resolve_opt("split", args.split)?;
    ctx.commit("reconstruct")?;

    let (model, _) = load_checkpoint(&checkpoint)?;
    let trees = load_split_trees(&forest, manifest.as_deref(), split)?;
    let space = model.config.param_space;
    let recons: Vec<Vec<Cuboid>> = par_map(&trees, ctx.threads, |tree| {
        let root = encode_tree(&model, tree)?;
        let preds = decode_teacher_forced(&model, tree, &root)?;
        reconstructed_leaves(tree, &preds, space)
    })?;

    // Leaf counts match by construction, so chamfer and transport costs are
    // both well defined per tree.
    let mut cd = 0.0;
    let mut transport = 0.0;
    for (tree, recon) in trees.iter().zip(&recons) {
        let truth = layout_to_points(&tree.leaf_cuboids(), PointMode::ThreeD)?;
        let rebuilt = layout_to_points(recon, PointMode::ThreeD)?;
        cd += chamfer(&truth, &rebuilt)?;
        transport += emd(&truth, &rebuilt)?;
    }
    let report = MetricReport {
        cd: Some(cd / trees.len() as f64),
        emd: Some(transport / trees.len() as f64),
        oar: Some(mean_oar(&recons)?),
        ..MetricReport::default()
    };

    let mut sets = Vec::with_capacity(trees.len());
    for (tree, recon) in trees.iter().zip(&recons) {
        let mut set = LayoutSet::new(tree.id.clone(), recon.clone())?;
        set.frame = tree.frame;
        sets.push(set);
    }
    write_layout_sets(ctx.out.join("reconstructions.txt"), &sets)?;
    write_report(&ctx.out, &report)?;
    for (tree, recon) in trees.iter().zip(&recons) {
        let truth = tree.leaf_cuboids();
        write_svg(
            ctx.out.join(format!("recon_{}.svg", tree.id)),
            &[
                Layer {
                    cuboids: &truth,
                    fill: "#c2c9d4",
                    opacity: 0.5,
                    dx: 0.0,
                },
                Layer::solo(recon),
            ],
        )?;
    }
    println!(
        "reconstruct: {} trees, cd {:.6}, emd {:.6}, oar {:.6} -> {}",
        trees.len(),
        report.cd.unwrap(),
        report.emd.unwrap(),
        report.oar.unwrap(),
        ctx.out.display()
    );
    Ok(())
}
