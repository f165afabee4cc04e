//! `blockgen export`: layout sets back into world coordinates, as SVG
//! footprints or OBJ box meshes.

use std::path::PathBuf;

use blockgen_core::forest_io::read_layout_sets;
use blockgen_core::tree::denormalize_frame;
use blockgen_core::{Error, Result};

use super::Ctx;
use crate::render::{write_obj, write_svg, Layer};

#[derive(Debug, clap::Args)]
pub struct ExportArgs {
    /// Layout sets file (normalized or generated)
    #[arg(long)]
    layouts: Option<PathBuf>,
    /// svg | obj
    #[arg(long)]
    format: Option<String>,
}

pub fn run(mut ctx: Ctx, args: ExportArgs) -> Result<()> {
    let layouts_path = ctx.resolver.require_path("layouts", args.layouts)?;
    let format = ctx.resolver.resolve("format", args.format, "svg".to_string())?;
    if format != "svg" && format != "obj" {
        return Err(Error::invalid(format!(
            "--format must be svg or obj, got {format:?}"
        )));
    }
    ctx.commit("export")?;

    let sets = read_layout_sets(&layouts_path)?;
    for set in &sets {
        let world = denormalize_frame(set);
        match format.as_str() {
            "svg" => write_svg(
                ctx.out.join(format!("{}.svg", world.id)),
                &[Layer::solo(&world.cuboids)],
            )?,
            _ => write_obj(ctx.out.join(format!("{}.obj", world.id)), &world.cuboids)?,
        }
    }
    println!(
        "export: {} layouts as {format} -> {}",
        sets.len(),
        ctx.out.display()
    );
    Ok(())
}
