//! Tree-structured LSTM autoencoder over spatial trees.
//!
//! Encoding runs bottom-up along the index matrices: each merge feeds both
//! children's geometric params and features through a shared LSTM cell and
//! sums the results into the parent feature. Decoding runs top-down: the
//! parent feature is lifted from H to 2H, a second cell produces both
//! children at once, and its output halves are split back into per-child
//! features. A linear head turns a child feature into 6 geometric params and
//! a leaf-indicator logit.
//!
//! The split-in-half decoder would shrink features at every level if the
//! cells shared one state size, so the decoder runs at state 2H with learned
//! affine lifts (`lift_h`, `lift_c`) bridging the parent's H-sized feature
//! into it. This keeps per-level feature size constant under shared weights.
//!
//! Trees are expected in a normalized frame (see
//! [`normalize_frame`](crate::tree::normalize_frame)); nothing here enforces
//! it, but the defaults and tolerances assume coordinates of order one.

mod forward;
mod io;
mod train;

pub use forward::{
    batch_loss, batch_loss_grads, decode_free, decode_step, decode_teacher_forced, encode_forest,
    encode_level, encode_tree, lstm_cell_forward, prediction_loss, reconstructed_leaves,
    ChildPrediction, LossConfig, NodePrediction,
};
pub use io::{load_checkpoint, save_checkpoint, write_loss_history};
pub use train::{train, LossRecord, TrainConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Geometric parameter count per node: x, y, l, w, h, a.
pub const PARAM_DIM: usize = 6;

/// Which parameter space the network reads and predicts.
///
/// `Relative` is the normal mode: every non-root node is expressed relative
/// to its parent. `Absolute` feeds and predicts raw normalized-frame
/// params instead, which exists to measure how much the relative encoding
/// buys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParamSpace {
    #[default]
    Relative,
    Absolute,
}

impl ParamSpace {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamSpace::Relative => "relative",
            ParamSpace::Absolute => "absolute",
        }
    }
}

impl std::str::FromStr for ParamSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative" => Ok(ParamSpace::Relative),
            "absolute" => Ok(ParamSpace::Absolute),
            other => Err(Error::invalid(format!(
                "param space must be \"relative\" or \"absolute\", got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for ParamSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Feature size H per node; the latent code (h, c) has 2H dims.
    pub hidden: usize,
    pub param_space: ParamSpace,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 256,
            param_space: ParamSpace::Relative,
        }
    }
}

/// One LSTM cell: gates = x wx + h wh + b, chunked [i, f, g, o].
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    /// input x 4*state
    pub wx: Tensor,
    /// state x 4*state
    pub wh: Tensor,
    /// 1 x 4*state
    pub b: Tensor,
}

impl CellParams {
    pub fn state_size(&self) -> usize {
        self.wh.rows
    }
}

/// y = x w + b.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub w: Tensor,
    pub b: Tensor,
}

/// Per-node feature (h, c); the latent code is their concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeature {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl NodeFeature {
    pub fn zeros(h: usize) -> Self {
        NodeFeature {
            hidden: vec![0.0; h],
            cell: vec![0.0; h],
        }
    }

    /// Concatenated (h, c) code of dimension 2H.
    pub fn latent(&self) -> Vec<f64> {
        let mut v = self.hidden.clone();
        v.extend_from_slice(&self.cell);
        v
    }

    pub fn from_latent(latent: &[f64]) -> Result<Self> {
        if latent.len() % 2 != 0 || latent.is_empty() {
            return Err(Error::invalid(format!(
                "latent length {} is not an even split of (h, c)",
                latent.len()
            )));
        }
        let h = latent.len() / 2;
        Ok(NodeFeature {
            hidden: latent[..h].to_vec(),
            cell: latent[h..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeAutoencoder {
    pub config: ModelConfig,
    /// Shared bottom-up cell: input 6, state H.
    pub encoder: CellParams,
    /// Top-down cell over both children at once: input 6+2H, state 2H.
    pub decoder: CellParams,
    pub lift_h: Affine,
    pub lift_c: Affine,
    /// H -> 7: six geometric params plus a leaf-indicator logit.
    pub head: Affine,
    /// Mean absolute root params over the training forest; seeds free-running
    /// decoding of sampled latents.
    pub root_params_mean: [f64; 6],
}

fn uniform_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound))
}

fn init_affine(rng: &mut ChaCha8Rng, input: usize, output: usize) -> Affine {
    let bound = 1.0 / (input as f64).sqrt();
    Affine {
        w: uniform_tensor(rng, input, output, bound),
        b: uniform_tensor(rng, 1, output, bound),
    }
}

fn init_cell(rng: &mut ChaCha8Rng, input: usize, state: usize) -> CellParams {
    let xb = 1.0 / (input as f64).sqrt();
    let hb = 1.0 / (state as f64).sqrt();
    let mut cell = CellParams {
        wx: uniform_tensor(rng, input, 4 * state, xb),
        wh: uniform_tensor(rng, state, 4 * state, hb),
        b: uniform_tensor(rng, 1, 4 * state, hb),
    };
    // Forget-gate chunk starts open so early cell state survives.
    for j in state..2 * state {
        cell.b.data[j] += 1.0;
    }
    cell
}

impl TreeAutoencoder {
    /// Fresh model with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and
    /// forget-gate biases shifted by +1. Deterministic in the seed.
    pub fn new(config: ModelConfig, seed: u64) -> Self {
        let h = config.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TreeAutoencoder {
            encoder: init_cell(&mut rng, PARAM_DIM, h),
            decoder: init_cell(&mut rng, PARAM_DIM + 2 * h, 2 * h),
            lift_h: init_affine(&mut rng, h, 2 * h),
            lift_c: init_affine(&mut rng, h, 2 * h),
            head: init_affine(&mut rng, h, PARAM_DIM + 1),
            root_params_mean: [0.0; 6],
            config,
        }
    }

    pub fn hidden(&self) -> usize {
        self.config.hidden
    }

    /// Trainable tensors in a fixed order shared by the optimizer, gradient
    /// extraction, and the checkpoint format.
    pub fn named_params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("encoder.wx", &self.encoder.wx),
            ("encoder.wh", &self.encoder.wh),
            ("encoder.b", &self.encoder.b),
            ("decoder.wx", &self.decoder.wx),
            ("decoder.wh", &self.decoder.wh),
            ("decoder.b", &self.decoder.b),
            ("lift_h.w", &self.lift_h.w),
            ("lift_h.b", &self.lift_h.b),
            ("lift_c.w", &self.lift_c.w),
            ("lift_c.b", &self.lift_c.b),
            ("head.w", &self.head.w),
            ("head.b", &self.head.b),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("encoder.wx", &mut self.encoder.wx),
            ("encoder.wh", &mut self.encoder.wh),
            ("encoder.b", &mut self.encoder.b),
            ("decoder.wx", &mut self.decoder.wx),
            ("decoder.wh", &mut self.decoder.wh),
            ("decoder.b", &mut self.decoder.b),
            ("lift_h.w", &mut self.lift_h.w),
            ("lift_h.b", &mut self.lift_h.b),
            ("lift_c.w", &mut self.lift_c.w),
            ("lift_c.b", &mut self.lift_c.b),
            ("head.w", &mut self.head.w),
            ("head.b", &mut self.head.b),
        ]
    }

    pub fn params_finite(&self) -> bool {
        self.named_params().iter().all(|(_, t)| t.is_finite())
            && self.root_params_mean.iter().all(|v| v.is_finite())
    }
}
