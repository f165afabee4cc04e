//! `blockgen build-trees`: greedy pairwise merges turn each layout set into
//! a binary spatial tree.

use std::fs;
use std::path::PathBuf;

use blockgen_core::forest_io::{read_layout_sets, write_forest};
use blockgen_core::tree::{build_tree, SgdWeights, SpatialTree};
use blockgen_core::{Error, Result};

use super::{parse_fixed, Ctx};
use crate::par::par_map;

#[derive(Debug, clap::Args)]
pub struct TreesArgs {
    /// Layout sets file
    #[arg(long)]
    sets: Option<PathBuf>,
    /// Merge distance weights: center,area,shape,angle,merge
    #[arg(long)]
    weights: Option<String>,
}

pub fn run(mut ctx: Ctx, args: TreesArgs) -> Result<()> {
    let sets_path = ctx.resolver.require_path("sets", args.sets)?;
    let d = SgdWeights::default();
    let default_weights = d.as_array().map(|w| w.to_string()).join(",");
    let weights_text = ctx.resolver.resolve("weights", args.weights, default_weights)?;
    let [center, area, shape, angle, merge] = parse_fixed::<5>("--weights", &weights_text)?;
    let weights = SgdWeights::new(center, area, shape, angle, merge)?;
    ctx.commit("build-trees")?;

    let sets = read_layout_sets(&sets_path)?;
    // Sets that cannot be merged (all-degenerate geometry) are reported and
    // skipped rather than sinking the whole run.
    let outcomes: Vec<Result<SpatialTree>> = par_map(&sets, ctx.threads, |set| {
        Ok(build_tree(set, &weights))
    })?;
    let mut forest = Vec::new();
    let mut skipped = String::new();
    for (set, outcome) in sets.iter().zip(outcomes) {
        match outcome {
            Ok(tree) => forest.push(tree),
            Err(e) => {
                ctx.log(format!("skipping set {}: {e}", set.id));
                skipped.push_str(&format!("{} {e}\n", set.id));
            }
        }
    }
    if forest.is_empty() {
        return Err(Error::invalid("every set failed to build a tree"));
    }
    write_forest(ctx.out.join("forest.txt"), &forest)?;
    fs::write(ctx.out.join("skipped.txt"), skipped)?;
    println!(
        "build-trees: {} trees ({} skipped) -> {}",
        forest.len(),
        sets.len() - forest.len(),
        ctx.out.join("forest.txt").display()
    );
    Ok(())
}
