//! `blockgen synth`: a jittered grid city for demos and pipeline tests.

use blockgen_core::dataset::{synth_city, write_buildings};
use blockgen_core::Result;

use super::Ctx;

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Grid rows
    #[arg(long)]
    rows: Option<usize>,
    /// Grid columns
    #[arg(long)]
    cols: Option<usize>,
    /// Placement/size/rotation noise in [0, 1]
    #[arg(long)]
    jitter: Option<f64>,
}

pub fn run(mut ctx: Ctx, args: SynthArgs) -> Result<()> {
    let rows = ctx.resolver.resolve("rows", args.rows, 8)?;
    let cols = ctx.resolver.resolve("cols", args.cols, 8)?;
    let jitter = ctx.resolver.resolve("jitter", args.jitter, 0.1)?;
    ctx.commit("synth")?;
    let records = synth_city(rows, cols, jitter, ctx.seed)?;
    write_buildings(ctx.out.join("buildings.jsonl"), &records)?;
    ctx.log(format!("wrote {} buildings", records.len()));
    println!("synth: {} buildings -> {}", records.len(), ctx.out.join("buildings.jsonl").display());
    Ok(())
}
