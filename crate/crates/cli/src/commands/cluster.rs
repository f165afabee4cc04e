//! `blockgen cluster`: PCA + mixture labels over the latents, plus a
//! footprint profile per cluster and a where-in-town composition table.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use blockgen_core::latent::{cluster_latents, ClusterSummary, CLUSTER_FEATURE_NAMES};
use blockgen_core::model::load_checkpoint;
use blockgen_core::nn::Tensor;
use blockgen_core::tree::SpatialTree;
use blockgen_core::{forest_io::read_forest, Result};

use super::{forest_latents, leaf_layouts, Ctx};

#[derive(Debug, clap::Args)]
pub struct ClusterArgs {
    /// Trained model checkpoint
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Forest file
    #[arg(long)]
    forest: Option<PathBuf>,
    /// PCA target dimension (clamped to the latent rank)
    #[arg(long)]
    pca_dim: Option<usize>,
    /// Mixture components = cluster count
    #[arg(long)]
    clusters: Option<usize>,
}

fn feature_csv(table: &Tensor) -> String {
    let mut s = format!("cluster,{}\n", CLUSTER_FEATURE_NAMES.join(","));
    for k in 0..table.rows {
        let row: Vec<String> = table.row(k).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{k},{}", row.join(","));
    }
    s
}

/// Cluster shares per city quadrant, reported as percentage-point deviation
/// from the global composition. Quadrants split at the mean set-frame
/// center; boundary sets go east/north.
fn composition(trees: &[SpatialTree], labels: &[usize], k: usize) -> String {
    let n = trees.len() as f64;
    let mx = trees.iter().map(|t| t.frame.cx).sum::<f64>() / n;
    let my = trees.iter().map(|t| t.frame.cy).sum::<f64>() / n;
    let region_of = |t: &SpatialTree| match (t.frame.cx >= mx, t.frame.cy >= my) {
        (false, true) => 0,
        (true, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    };
    let mut counts = [vec![0usize; k], vec![0; k], vec![0; k], vec![0; k]];
    for (tree, &label) in trees.iter().zip(labels) {
        counts[region_of(tree)][label] += 1;
    }
    let mut global = vec![0.0f64; k];
    for region in &counts {
        for (g, c) in global.iter_mut().zip(region) {
            *g += *c as f64;
        }
    }
    for g in &mut global {
        *g *= 100.0 / n;
    }
    let mut s = String::from("# cluster share by city quadrant, in percentage points\n");
    let _ = writeln!(s, "clusters {k}");
    let _ = writeln!(s, "sets {}", trees.len());
    let shares: Vec<String> = global.iter().map(|g| format!("{g:.2}")).collect();
    let _ = writeln!(s, "global {}", shares.join(" "));
    for (name, region) in ["nw", "ne", "sw", "se"].iter().zip(&counts) {
        let total: usize = region.iter().sum();
        let deltas: Vec<String> = region
            .iter()
            .zip(&global)
            .map(|(&c, &g)| {
                let share = if total == 0 {
                    0.0
                } else {
                    100.0 * c as f64 / total as f64
                };
                format!("{:+.2}", share - g)
            })
            .collect();
        let _ = writeln!(s, "region {name} sets {total} delta {}", deltas.join(" "));
    }
    s
}

pub fn run(mut ctx: Ctx, args: ClusterArgs) -> Result<()> {
    let checkpoint = ctx.resolver.require_path("checkpoint", args.checkpoint)?;
    let forest = ctx.resolver.require_path("forest", args.forest)?;
    let pca_dim = ctx.resolver.resolve("pca-dim", args.pca_dim, 50)?;
    let clusters = ctx.resolver.resolve("clusters", args.clusters, 11)?;
    ctx.commit("cluster")?;

    let (model, _) = load_checkpoint(&checkpoint)?;
    let trees = read_forest(&forest)?;
    let latents = forest_latents(&model, &trees)?;
    let layouts = leaf_layouts(&trees);
    let ClusterSummary { labels, raw, scaled } =
        cluster_latents(&latents, &layouts, pca_dim, clusters, ctx.seed)?;

    let mut labels_csv = String::from("set,cluster\n");
    for (tree, label) in trees.iter().zip(&labels) {
        let _ = writeln!(labels_csv, "{},{label}", tree.id);
    }
    fs::write(ctx.out.join("labels.csv"), labels_csv)?;
    fs::write(ctx.out.join("features.csv"), feature_csv(&raw))?;
    fs::write(ctx.out.join("features_scaled.csv"), feature_csv(&scaled))?;
    fs::write(
        ctx.out.join("composition.txt"),
        composition(&trees, &labels, clusters),
    )?;
    println!(
        "cluster: {} sets into {clusters} clusters -> {}",
        trees.len(),
        ctx.out.display()
    );
    Ok(())
}
