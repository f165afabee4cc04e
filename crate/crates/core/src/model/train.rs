//! ADAM training over forests of spatial trees.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::tree::{params_of, SpatialTree};

use super::forward::{batch_loss_grads, LossConfig};
use super::{ModelConfig, TreeAutoencoder};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Learning rate is multiplied by 0.5 every this many optimizer steps.
    pub lr_halving_period_steps: usize,
    pub batch_size_sets: usize,
    pub level_weight_gamma: f64,
    pub bce_weight: f64,
    pub max_epochs: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            lr_halving_period_steps: 400,
            batch_size_sets: 50,
            level_weight_gamma: 0.8,
            bce_weight: 1.0,
            max_epochs: 10,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("level_weight_gamma", self.level_weight_gamma),
            ("bce_weight", self.bce_weight),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} {v} must be positive")));
            }
        }
        if self.level_weight_gamma > 1.0 {
            return Err(Error::invalid(format!(
                "level_weight_gamma {} outside (0, 1]",
                self.level_weight_gamma
            )));
        }
        let counts = [
            ("lr_halving_period_steps", self.lr_halving_period_steps),
            ("batch_size_sets", self.batch_size_sets),
            ("max_epochs", self.max_epochs),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            level_weight_gamma: self.level_weight_gamma,
            bce_weight: self.bce_weight,
        }
    }

    /// Learning rate for a 0-indexed optimizer step.
    pub fn lr_at(&self, step: usize) -> f64 {
        self.learning_rate * 0.5f64.powi((step / self.lr_halving_period_steps) as i32)
    }
}

/// One optimizer step's record; serialized to the loss-history CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
}

struct Adam {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &TreeAutoencoder) -> Self {
        let zeros: Vec<Tensor> = model
            .named_params()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.rows, t.cols))
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut TreeAutoencoder, grads: &[(&'static str, Tensor)], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - Self::B1.powi(self.t);
        let bc2 = 1.0 - Self::B2.powi(self.t);
        for (i, (name, param)) in model.named_params_mut().into_iter().enumerate() {
            debug_assert_eq!(name, grads[i].0);
            let g = &grads[i].1;
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for e in 0..param.data.len() {
                let gv = g.data[e];
                m.data[e] = Self::B1 * m.data[e] + (1.0 - Self::B1) * gv;
                v.data[e] = Self::B2 * v.data[e] + (1.0 - Self::B2) * gv * gv;
                let mh = m.data[e] / bc1;
                let vh = v.data[e] / bc2;
                param.data[e] -= lr * mh / (vh.sqrt() + Self::EPS);
            }
        }
    }
}

/// Trains a fresh model on the forest. Deterministic in `cfg.rng_seed`:
/// initialization, shuffling, and every summation run in a fixed order.
///
/// `on_epoch` runs after each epoch with the current model and the epoch's
/// mean batch loss; persisting a checkpoint there keeps the last good state
/// on disk if a later step diverges.
pub fn train(
    trees: &[SpatialTree],
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&TreeAutoencoder, usize, f64) -> Result<()>,
) -> Result<(TreeAutoencoder, Vec<LossRecord>)> {
    cfg.validate()?;
    if trees.is_empty() {
        return Err(Error::invalid("train: empty forest"));
    }
    let mut model = TreeAutoencoder::new(model_cfg, cfg.rng_seed);
    let mut mean = [0.0f64; 6];
    for t in trees {
        let p = params_of(&t.nodes[t.root].cuboid);
        for (acc, v) in mean.iter_mut().zip(p) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= trees.len() as f64;
    }
    model.root_params_mean = mean;

    let loss_cfg = cfg.loss_config();
    let mut adam = Adam::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut history = Vec::new();
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..trees.len()).collect();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size_sets) {
            let batch: Vec<&SpatialTree> = chunk.iter().map(|&i| &trees[i]).collect();
            let (loss, grads) = batch_loss_grads(&model, &batch, &loss_cfg)?;
            let lr = cfg.lr_at(step);
            adam.step(&mut model, &grads, lr);
            if !model.params_finite() {
                return Err(Error::TrainingDiverged(format!(
                    "parameters non-finite after step {step}"
                )));
            }
            history.push(LossRecord { step, lr, loss });
            epoch_loss += loss;
            batches += 1;
            step += 1;
        }
        on_epoch(&model, epoch, epoch_loss / batches as f64)?;
    }
    Ok((model, history))
}
