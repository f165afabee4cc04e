//! Checkpoint and loss-history files.
//!
//! Checkpoints are plain text: a versioned header, the model and training
//! config as key-value lines, then one block per parameter tensor with its
//! shape and row-major values. Floats print in shortest round-trip form, so
//! a save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forest_io::{parse, parse_floats, Lines};

use super::train::{LossRecord, TrainConfig};
use super::{ModelConfig, TreeAutoencoder};

const CHECKPOINT_HEADER: &str = "# blockgen checkpoint v1";

pub fn save_checkpoint(path: &Path, model: &TreeAutoencoder, cfg: &TrainConfig) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CHECKPOINT_HEADER}")?;
    writeln!(w, "hidden {}", model.config.hidden)?;
    writeln!(w, "param_space {}", model.config.param_space)?;
    let rpm = model.root_params_mean;
    writeln!(
        w,
        "root_params_mean {} {} {} {} {} {}",
        rpm[0], rpm[1], rpm[2], rpm[3], rpm[4], rpm[5]
    )?;
    writeln!(w, "learning_rate {}", cfg.learning_rate)?;
    writeln!(w, "lr_halving_period_steps {}", cfg.lr_halving_period_steps)?;
    writeln!(w, "batch_size_sets {}", cfg.batch_size_sets)?;
    writeln!(w, "level_weight_gamma {}", cfg.level_weight_gamma)?;
    writeln!(w, "bce_weight {}", cfg.bce_weight)?;
    writeln!(w, "max_epochs {}", cfg.max_epochs)?;
    writeln!(w, "rng_seed {}", cfg.rng_seed)?;
    for (name, t) in model.named_params() {
        writeln!(w, "param {name} {} {}", t.rows, t.cols)?;
        for r in 0..t.rows {
            let mut line = String::new();
            for (j, v) in t.row(r).iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn expect_kv(lines: &mut Lines, key: &str, arity: usize) -> Result<Vec<String>> {
    let fields = lines
        .next_fields()?
        .ok_or_else(|| Error::schema(lines.number + 1, format!("missing \"{key}\" line")))?;
    if fields[0] != key || fields.len() != arity + 1 {
        return Err(Error::schema(
            lines.number,
            format!("expected \"{key}\" with {arity} value(s), got {:?}", fields.join(" ")),
        ));
    }
    Ok(fields[1..].to_vec())
}

pub fn load_checkpoint(path: &Path) -> Result<(TreeAutoencoder, TrainConfig)> {
    let mut lines = Lines::open(path)?;
    lines.expect_header(CHECKPOINT_HEADER)?;
    let hidden: usize = parse(lines.number, &expect_kv(&mut lines, "hidden", 1)?[0])?;
    if hidden == 0 {
        return Err(Error::schema(lines.number, "hidden must be positive"));
    }
    let param_space = parse(lines.number, &expect_kv(&mut lines, "param_space", 1)?[0])?;
    let rpm_fields = expect_kv(&mut lines, "root_params_mean", 6)?;
    let root_params_mean = parse_floats::<6>(lines.number, &rpm_fields)?;
    let cfg = TrainConfig {
        learning_rate: parse(lines.number, &expect_kv(&mut lines, "learning_rate", 1)?[0])?,
        lr_halving_period_steps: parse(
            lines.number,
            &expect_kv(&mut lines, "lr_halving_period_steps", 1)?[0],
        )?,
        batch_size_sets: parse(lines.number, &expect_kv(&mut lines, "batch_size_sets", 1)?[0])?,
        level_weight_gamma: parse(
            lines.number,
            &expect_kv(&mut lines, "level_weight_gamma", 1)?[0],
        )?,
        bce_weight: parse(lines.number, &expect_kv(&mut lines, "bce_weight", 1)?[0])?,
        max_epochs: parse(lines.number, &expect_kv(&mut lines, "max_epochs", 1)?[0])?,
        rng_seed: parse(lines.number, &expect_kv(&mut lines, "rng_seed", 1)?[0])?,
    };

    let mut model = TreeAutoencoder::new(
        ModelConfig {
            hidden,
            param_space,
        },
        0,
    );
    model.root_params_mean = root_params_mean;
    let expected: Vec<(&'static str, usize, usize)> = model
        .named_params()
        .iter()
        .map(|(name, t)| (*name, t.rows, t.cols))
        .collect();
    for (i, (name, rows, cols)) in expected.into_iter().enumerate() {
        let fields = expect_kv(&mut lines, "param", 3)?;
        if fields[0] != name {
            return Err(Error::schema(
                lines.number,
                format!("expected parameter {name}, got {}", fields[0]),
            ));
        }
        let (r, c): (usize, usize) = (parse(lines.number, &fields[1])?, parse(lines.number, &fields[2])?);
        if (r, c) != (rows, cols) {
            return Err(Error::schema(
                lines.number,
                format!("{name} has shape {r} x {c}, expected {rows} x {cols}"),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let row = lines.next_fields()?.ok_or_else(|| {
                Error::schema(lines.number + 1, format!("truncated rows of {name}"))
            })?;
            if row.len() != cols {
                return Err(Error::schema(
                    lines.number,
                    format!("{name} row has {} values, expected {cols}", row.len()),
                ));
            }
            for field in &row {
                let v: f64 = parse(lines.number, field)?;
                if !v.is_finite() {
                    return Err(Error::schema(
                        lines.number,
                        format!("non-finite value {field:?} in {name}"),
                    ));
                }
                data.push(v);
            }
        }
        model.named_params_mut()[i].1.data = data;
    }
    if let Some(extra) = lines.next_fields()? {
        return Err(Error::schema(
            lines.number,
            format!("unexpected trailing line {:?}", extra.join(" ")),
        ));
    }
    cfg.validate()?;
    Ok((model, cfg))
}

pub fn write_loss_history(path: &Path, records: &[LossRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "step,lr,loss")?;
    for r in records {
        writeln!(w, "{},{},{}", r.step, r.lr, r.loss)?;
    }
    w.flush()?;
    Ok(())
}
