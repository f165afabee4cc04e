//! `blockgen train`: fit the tree autoencoder on a forest split.

use std::path::PathBuf;

use blockgen_core::dataset::Split;
use blockgen_core::model::{
    save_checkpoint, train, write_loss_history, ModelConfig, ParamSpace, TrainConfig,
};
use blockgen_core::Result;

use super::{load_split_trees, Ctx};

/// A checkpoint lands every this many epochs, so divergence late in a run
/// still leaves the last good weights behind.
const CHECKPOINT_EVERY: usize = 100;

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// Forest file
    #[arg(long)]
    forest: Option<PathBuf>,
    /// Split manifest; filters the forest together with --split
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// train | val | test
    #[arg(long)]
    split: Option<Split>,
    /// Feature size H per node
    #[arg(long)]
    hidden: Option<usize>,
    /// Box parameter encoding: relative | absolute
    #[arg(long)]
    param_space: Option<ParamSpace>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Halve the learning rate every this many optimizer steps
    #[arg(long)]
    lr_halving: Option<usize>,
    /// Sets per optimizer step
    #[arg(long)]
    batch: Option<usize>,
    /// Per-level loss decay toward the leaves
    #[arg(long)]
    gamma: Option<f64>,
    /// Weight of the leaf/split classification term
    #[arg(long)]
    bce_weight: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

pub fn run(mut ctx: Ctx, args: TrainArgs) -> Result<()> {
    let forest = ctx.resolver.require_path("forest", args.forest)?;
    let manifest = ctx.resolver.resolve_path("manifest", args.manifest)?;
    let split = ctx.resolver.resolve_opt("split", args.split)?;
    let defaults = TrainConfig::default();
    let model_defaults = ModelConfig::default();
    let hidden = ctx.resolver.resolve("hidden", args.hidden, model_defaults.hidden)?;
    let param_space = ctx
        .resolver
        .resolve("param-space", args.param_space, model_defaults.param_space)?;
    let cfg = TrainConfig {
        learning_rate: ctx
            .resolver
            .resolve("learning-rate", args.learning_rate, defaults.learning_rate)?,
        lr_halving_period_steps: ctx.resolver.resolve(
            "lr-halving",
            args.lr_halving,
            defaults.lr_halving_period_steps,
        )?,
        batch_size_sets: ctx.resolver.resolve("batch", args.batch, defaults.batch_size_sets)?,
        level_weight_gamma: ctx
            .resolver
            .resolve("gamma", args.gamma, defaults.level_weight_gamma)?,
        bce_weight: ctx
            .resolver
            .resolve("bce-weight", args.bce_weight, defaults.bce_weight)?,
        max_epochs: ctx.resolver.resolve("epochs", args.epochs, defaults.max_epochs)?,
        rng_seed: ctx.seed,
    };
    ctx.commit("train")?;

    let trees = load_split_trees(&forest, manifest.as_deref(), split)?;
    ctx.log(format!("training on {} trees", trees.len()));
    let checkpoint = ctx.out.join("checkpoint.txt");
    let model_cfg = ModelConfig {
        hidden,
        param_space,
    };
    let (model, history) = train(&trees, model_cfg, &cfg, |model, epoch, loss| {
        if (epoch + 1) % CHECKPOINT_EVERY == 0 {
            save_checkpoint(&checkpoint, model, &cfg)?;
        }
        if (epoch + 1) % 10 == 0 {
            ctx.log(format!("epoch {} loss {loss:.6}", epoch + 1));
        }
        Ok(())
    })?;
    save_checkpoint(&checkpoint, &model, &cfg)?;
    write_loss_history(&ctx.out.join("loss.csv"), &history)?;
    let last = history.last().map_or(f64::NAN, |r| r.loss);
    println!(
        "train: {} trees, {} steps, final batch loss {last:.6} -> {}",
        trees.len(),
        history.len(),
        checkpoint.display()
    );
    Ok(())
}
