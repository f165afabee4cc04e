//! Subcommand implementations and the plumbing they share.

pub mod cluster;
pub mod export;
pub mod generate;
pub mod gmm;
pub mod ingest;
pub mod interpolate;
pub mod reconstruct;
pub mod synth;
pub mod train;
pub mod trees;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blockgen_core::dataset::{read_manifest, Split};
use blockgen_core::forest_io::read_forest;
use blockgen_core::geometry::Cuboid;
use blockgen_core::metrics::{layout_to_points, oar, MetricReport, PointCloud, PointMode};
use blockgen_core::model::{decode_free, encode_forest, NodeFeature, TreeAutoencoder};
use blockgen_core::nn::Tensor;
use blockgen_core::tree::SpatialTree;
use blockgen_core::{Error, Result};

use crate::config::{write_run_config, Resolver};
use crate::Globals;

/// Per-invocation state every command needs: the resolved globals plus the
/// resolver for its own keys.
pub struct Ctx {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub verbose: bool,
    pub resolver: Resolver,
}

impl Ctx {
    pub fn new(globals: &Globals) -> Result<Ctx> {
        let mut resolver = Resolver::new(globals.config.as_deref())?;
        let out = resolver.require_path("out", globals.out.clone())?;
        let seed = resolver.resolve("seed", globals.seed, 0)?;
        let threads = resolver.resolve("threads", globals.threads, 1)?;
        if threads == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        let verbose = resolver.resolve_switch("verbose", globals.verbose)?;
        Ok(Ctx {
            out,
            seed,
            threads,
            verbose,
            resolver,
        })
    }

    /// Creates the output directory and echoes the effective configuration.
    /// Call once all keys are resolved, before writing other outputs.
    pub fn commit(&self, command: &str) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        write_run_config(&self.out, command, self.resolver.resolved())
    }

    pub fn log(&self, msg: impl Display) {
        if self.verbose {
            eprintln!("blockgen: {msg}");
        }
    }
}

/// Comma-separated list parser used by grid and ratio flags.
pub fn parse_list<T>(what: &str, text: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        out.push(
            part.parse()
                .map_err(|e| Error::invalid(format!("{what}: bad entry {part:?}: {e}")))?,
        );
    }
    Ok(out)
}

pub fn parse_fixed<const N: usize>(what: &str, text: &str) -> Result<[f64; N]> {
    let list: Vec<f64> = parse_list(what, text)?;
    list.try_into()
        .map_err(|v: Vec<f64>| Error::invalid(format!("{what}: expected {N} values, got {}", v.len())))
}

/// Reads a forest and keeps the trees the manifest assigns to `split`.
/// Filtering requires both flags: a manifest without a split (or the
/// reverse) is a usage error, and no manifest means the whole forest.
pub fn load_split_trees(
    forest: &Path,
    manifest: Option<&Path>,
    split: Option<Split>,
) -> Result<Vec<SpatialTree>> {
    let all = read_forest(forest)?;
    let (manifest, split) = match (manifest, split) {
        (None, None) => return Ok(all),
        (Some(m), Some(s)) => (m, s),
        (Some(_), None) => return Err(Error::invalid("--manifest needs --split")),
        (None, Some(_)) => return Err(Error::invalid("--split needs --manifest")),
    };
    let manifest = read_manifest(manifest)?;
    let keep: std::collections::HashSet<&str> = manifest.ids(split).into_iter().collect();
    let trees: Vec<SpatialTree> = all
        .into_iter()
        .filter(|t| keep.contains(t.id.as_str()))
        .collect();
    if trees.is_empty() {
        return Err(Error::invalid(format!(
            "no trees in the forest belong to the {split} split"
        )));
    }
    Ok(trees)
}

/// Root latent code per tree, stacked into an N x 2H matrix.
pub fn forest_latents(model: &TreeAutoencoder, trees: &[SpatialTree]) -> Result<Tensor> {
    let refs: Vec<&SpatialTree> = trees.iter().collect();
    let features = encode_forest(model, &refs)?;
    let cols = 2 * model.hidden();
    let mut data = Vec::with_capacity(features.len() * cols);
    for f in &features {
        data.extend(f.latent());
    }
    Tensor::from_vec(features.len(), cols, data)
}

pub fn leaf_layouts(trees: &[SpatialTree]) -> Vec<Vec<Cuboid>> {
    trees.iter().map(|t| t.leaf_cuboids()).collect()
}

/// Every layout as a 3D corner cloud; flat layouts simply repeat their
/// footprint corners at height zero.
pub fn layout_clouds(layouts: &[Vec<Cuboid>]) -> Result<Vec<PointCloud>> {
    layouts
        .iter()
        .map(|l| layout_to_points(l, PointMode::ThreeD))
        .collect()
}

/// Mean overlap ratio across layouts. Layouts whose boxes all have zero
/// area carry no signal and are skipped; if every layout is like that, the
/// first error propagates.
pub fn mean_oar(layouts: &[Vec<Cuboid>]) -> Result<f64> {
    let mut values = Vec::new();
    let mut first_err = None;
    for layout in layouts {
        match oar(layout) {
            Ok(v) => values.push(v),
            Err(e) => first_err = first_err.or(Some(e)),
        }
    }
    if values.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::invalid("no layouts to score")));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Free-decodes one layout per latent row, seeding the root box from the
/// training mean.
pub fn decode_rows(
    model: &TreeAutoencoder,
    latents: &Tensor,
    max_depth: usize,
    leaf_threshold: f64,
) -> Result<Vec<Vec<Cuboid>>> {
    let mut out = Vec::with_capacity(latents.rows);
    for r in 0..latents.rows {
        let feature = NodeFeature::from_latent(latents.row(r))?;
        out.push(decode_free(
            model,
            &model.root_params_mean,
            &feature,
            max_depth,
            leaf_threshold,
        )?);
    }
    Ok(out)
}

/// `report.csv` keeps full precision; `report.txt` is the aligned table.
pub fn write_report(dir: &Path, report: &MetricReport) -> Result<()> {
    fs::write(dir.join("report.csv"), report.to_csv())?;
    fs::write(dir.join("report.txt"), report.to_table())?;
    Ok(())
}
