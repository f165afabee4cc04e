//! `blockgen ingest`: buildings file -> normalized layout sets + split manifest.

use std::fs;
use std::path::PathBuf;

use blockgen_core::dataset::{
    build_layout_sets, read_buildings, split, DEFAULT_NEIGHBORS, DEFAULT_SPLIT_RATIOS,
};
use blockgen_core::dataset::write_manifest;
use blockgen_core::forest_io::write_layout_sets;
use blockgen_core::Result;

use super::{parse_fixed, Ctx};

#[derive(Debug, clap::Args)]
pub struct IngestArgs {
    /// Buildings file (JSON lines)
    #[arg(long)]
    buildings: Option<PathBuf>,
    /// Buildings per layout set, anchor included
    #[arg(long)]
    k: Option<usize>,
    /// train,val,test fractions
    #[arg(long)]
    ratios: Option<String>,
}

pub fn run(mut ctx: Ctx, args: IngestArgs) -> Result<()> {
    let buildings_path = ctx.resolver.require_path("buildings", args.buildings)?;
    let k = ctx.resolver.resolve("k", args.k, DEFAULT_NEIGHBORS)?;
    let default_ratios = DEFAULT_SPLIT_RATIOS.map(|r| r.to_string()).join(",");
    let ratios_text = ctx.resolver.resolve("ratios", args.ratios, default_ratios)?;
    let ratios = parse_fixed::<3>("--ratios", &ratios_text)?;
    ctx.commit("ingest")?;

    let records = read_buildings(&buildings_path)?;
    let assembly = build_layout_sets(&records, k)?;
    ctx.log(format!(
        "{} sets from {} buildings ({} skipped)",
        assembly.sets.len(),
        records.len(),
        assembly.skipped.len()
    ));
    write_layout_sets(ctx.out.join("sets.txt"), &assembly.sets)?;

    let mut skipped = assembly.skipped.join("\n");
    if !skipped.is_empty() {
        skipped.push('\n');
    }
    fs::write(ctx.out.join("skipped.txt"), skipped)?;

    let mut manifest = split(&assembly.sets, ratios, ctx.seed)?;
    manifest.notes = format!("ingest k={k} sets={}", assembly.sets.len());
    write_manifest(ctx.out.join("manifest.txt"), &manifest)?;
    println!(
        "ingest: {} sets (k={k}, {} skipped) -> {}",
        assembly.sets.len(),
        assembly.skipped.len(),
        ctx.out.display()
    );
    Ok(())
}
