//! `blockgen interpolate`: walk the latent line between two encoded layouts
//! and decode every step.

use std::path::PathBuf;

use blockgen_core::forest_io::{read_forest, write_layout_sets};
use blockgen_core::latent::interpolate;
use blockgen_core::model::{decode_free, encode_tree, load_checkpoint, NodeFeature};
use blockgen_core::tree::{params_of, LayoutSet, SpatialTree};
use blockgen_core::{Error, Result};

use crate::render::{write_svg, Layer};

use super::Ctx;

#[derive(Debug, clap::Args)]
pub struct InterpolateArgs {
    /// Trained model checkpoint
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Forest file holding both endpoints
    #[arg(long)]
    forest: Option<PathBuf>,
    /// Id of the first endpoint tree
    #[arg(long)]
    set_a: Option<String>,
    /// Id of the second endpoint tree
    #[arg(long)]
    set_b: Option<String>,
    /// Number of decoded layouts, endpoints included (at least 2)
    #[arg(long)]
    steps: Option<usize>,
    /// Free-decode depth cap
    #[arg(long)]
    max_depth: Option<usize>,
    /// Leaf probability above which decoding stops splitting
    #[arg(long)]
    leaf_threshold: Option<f64>,
}

fn find<'t>(trees: &'t [SpatialTree], id: &str) -> Result<&'t SpatialTree> {
    trees
        .iter()
        .find(|t| t.id == id)
        .ok_or_else(|| Error::invalid(format!("no tree with id {id:?} in the forest")))
}

pub fn run(mut ctx: Ctx, args: InterpolateArgs) -> Result<()> {
    let checkpoint = ctx.resolver.require_path("checkpoint", args.checkpoint)?;
    let forest = ctx.resolver.require_path("forest", args.forest)?;
    let id_a = ctx.resolver.require("set-a", args.set_a)?;
    let id_b = ctx.resolver.require("set-b", args.set_b)?;
    let steps = ctx.resolver.resolve("steps", args.steps, 5)?;
    let max_depth = ctx.resolver.resolve("max-depth", args.max_depth, 8)?;
    let leaf_threshold = ctx
        .resolver
        .resolve("leaf-threshold", args.leaf_threshold, 0.5)?;
    ctx.commit("interpolate")?;

    let (model, _) = load_checkpoint(&checkpoint)?;
    let trees = read_forest(&forest)?;
    let tree_a = find(&trees, &id_a)?;
    let tree_b = find(&trees, &id_b)?;
    let za = encode_tree(&model, tree_a)?.latent();
    let zb = encode_tree(&model, tree_b)?.latent();
    let line = interpolate(&za, &zb, steps)?;
    let ra = params_of(&tree_a.nodes[tree_a.root].cuboid);
    let rb = params_of(&tree_b.nodes[tree_b.root].cuboid);

    let mut sets = Vec::with_capacity(steps);
    for (i, z) in line.iter().enumerate() {
        // Root params ride the same line as the latent so the decoded frame
        // drifts smoothly from one endpoint's footprint to the other's. The
        // ends reuse the originals bit for bit, like the latent line does.
        let t = i as f64 / (steps - 1) as f64;
        let mut root = [0.0; 6];
        for d in 0..6 {
            root[d] = if i == 0 {
                ra[d]
            } else if i == steps - 1 {
                rb[d]
            } else {
                (1.0 - t) * ra[d] + t * rb[d]
            };
        }
        let feature = NodeFeature::from_latent(z)?;
        let layout = decode_free(&model, &root, &feature, max_depth, leaf_threshold)?;
        sets.push(LayoutSet::new(format!("step{i:02}"), layout)?);
    }
    write_layout_sets(ctx.out.join("steps.txt"), &sets)?;

    let mut strip = Vec::new();
    let widths: Vec<f64> = sets
        .iter()
        .map(|s| {
            s.cuboids
                .iter()
                .flat_map(|c| c.footprint_corners())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), [x, _]| {
                    (lo.min(x), hi.max(x))
                })
        })
        .map(|(lo, hi)| hi - lo)
        .collect();
    let pitch = widths.iter().cloned().fold(0.0, f64::max) * 1.2;
    for (i, set) in sets.iter().enumerate() {
        write_svg(
            ctx.out.join(format!("step_{i:02}.svg")),
            &[Layer::solo(&set.cuboids)],
        )?;
        strip.push(Layer {
            cuboids: &set.cuboids,
            fill: "#728eb4",
            opacity: 0.85,
            dx: pitch * i as f64,
        });
    }
    write_svg(ctx.out.join("strip.svg"), &strip)?;
    println!(
        "interpolate: {steps} steps from {id_a} to {id_b} -> {}",
        ctx.out.join("steps.txt").display()
    );
    Ok(())
}
