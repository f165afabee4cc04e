//! Building-layout modeling library.
//!
//! The pipeline: ingest building footprints ([`dataset`]), reduce each to an
//! oriented box ([`geometry`]), group neighborhoods into layout sets and build
//! a binary spatial hierarchy over each set ([`tree`]), train a tree-structured
//! LSTM autoencoder on the hierarchies ([`model`]), estimate a density over the
//! learned root latents and sample it for novel layouts ([`latent`]), and score
//! reconstructions and generations ([`metrics`]).

pub mod dataset;
pub mod error;
pub mod forest_io;
pub mod geometry;
pub mod latent;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod tree;

pub use error::{Error, Result};
pub use geometry::Cuboid;
pub use metrics::{MetricReport, PointCloud};
pub use tree::{Frame, LayoutSet, SgdWeights, SpatialTree};
