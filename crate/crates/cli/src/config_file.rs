//! `key = value` run configuration files.
//!
//! One setting per line; `#` starts a comment. Keys are the training
//! configuration fields, with the iteration settings spelled
//! `iteration_mode`, `fixed_iterations`, `max_iterations`, `threshold_base`,
//! `threshold_step`, `threshold_cap` and `residual`. Unset keys keep their
//! defaults; unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::str::FromStr;

use iterlstm_core::cell::IterationMode;
use iterlstm_core::lm::{TokenMode, TrainConfig};

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "layers",
    "units",
    "batch_size",
    "unroll_length",
    "epochs",
    "lr_base",
    "lr_constant_epochs",
    "lr_decay",
    "keep_prob",
    "init_range",
    "clip_norm",
    "l2",
    "seed",
    "mode",
    "init_margin",
    "eval_batch_size",
    "log_wall_time",
    "iteration_mode",
    "fixed_iterations",
    "max_iterations",
    "threshold_base",
    "threshold_step",
    "threshold_cap",
    "residual",
];

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::usage(format!("line {line}: invalid value {raw:?} for {key}")))
}

fn set(cfg: &mut TrainConfig, key: &str, raw: &str, line: usize) -> Result<(), CliError> {
    let it = &mut cfg.iteration;
    match key {
        "layers" => cfg.layers = value(key, raw, line)?,
        "units" => cfg.units = value(key, raw, line)?,
        "batch_size" => cfg.batch_size = value(key, raw, line)?,
        "unroll_length" => cfg.unroll_length = value(key, raw, line)?,
        "epochs" => cfg.epochs = value(key, raw, line)?,
        "lr_base" => cfg.lr_base = value(key, raw, line)?,
        "lr_constant_epochs" => cfg.lr_constant_epochs = value(key, raw, line)?,
        "lr_decay" => cfg.lr_decay = value(key, raw, line)?,
        "keep_prob" => cfg.keep_prob = value(key, raw, line)?,
        "init_range" => cfg.init_range = value(key, raw, line)?,
        "clip_norm" => cfg.clip_norm = value(key, raw, line)?,
        "l2" => cfg.l2 = value(key, raw, line)?,
        "seed" => cfg.seed = value(key, raw, line)?,
        "mode" => cfg.mode = TokenMode::from_str(raw).map_err(|e| CliError::usage(format!("line {line}: {e}")))?,
        "init_margin" => {
            cfg.init_margin = if raw == "none" { None } else { Some(value(key, raw, line)?) };
        }
        "eval_batch_size" => cfg.eval_batch_size = value(key, raw, line)?,
        "log_wall_time" => cfg.log_wall_time = value(key, raw, line)?,
        "iteration_mode" => {
            it.mode = match raw {
                "fixed" => IterationMode::Fixed,
                "adaptive" => IterationMode::Adaptive,
                _ => return Err(CliError::usage(format!("line {line}: iteration_mode must be fixed or adaptive"))),
            }
        }
        "fixed_iterations" => it.fixed_iterations = value(key, raw, line)?,
        "max_iterations" => it.max_iterations = value(key, raw, line)?,
        "threshold_base" => it.threshold_base = value(key, raw, line)?,
        "threshold_step" => it.threshold_step = value(key, raw, line)?,
        "threshold_cap" => it.threshold_cap = value(key, raw, line)?,
        "residual" => it.residual = value(key, raw, line)?,
        _ => return Err(CliError::usage(format!("line {line}: unknown key {key:?}"))),
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<TrainConfig, CliError> {
    let mut entries: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
    for (k, raw_line) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, val) = content
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("line {line}: expected key = value")))?;
        let (key, val) = (key.trim(), val.trim());
        if !KEYS.contains(&key) {
            return Err(CliError::usage(format!("line {line}: unknown key {key:?}")));
        }
        if let Some((_, first)) = entries.insert(key, (val, line)) {
            return Err(CliError::usage(format!("line {line}: {key} already set on line {first}")));
        }
    }
    let mut cfg = TrainConfig::default();
    for (key, (val, line)) in entries {
        set(&mut cfg, key, val, line)?;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

/// Renders every key, in [`KEYS`] order.
pub fn render(cfg: &TrainConfig) -> String {
    let it = &cfg.iteration;
    let mode = match cfg.mode {
        TokenMode::Word => "word",
        TokenMode::Char => "char",
    };
    let iteration_mode = match it.mode {
        IterationMode::Fixed => "fixed",
        IterationMode::Adaptive => "adaptive",
    };
    let margin = cfg.init_margin.map_or("none".to_string(), |m| m.to_string());
    let values: [String; 24] = [
        cfg.layers.to_string(),
        cfg.units.to_string(),
        cfg.batch_size.to_string(),
        cfg.unroll_length.to_string(),
        cfg.epochs.to_string(),
        cfg.lr_base.to_string(),
        cfg.lr_constant_epochs.to_string(),
        cfg.lr_decay.to_string(),
        cfg.keep_prob.to_string(),
        cfg.init_range.to_string(),
        cfg.clip_norm.to_string(),
        cfg.l2.to_string(),
        cfg.seed.to_string(),
        mode.to_string(),
        margin,
        cfg.eval_batch_size.to_string(),
        cfg.log_wall_time.to_string(),
        iteration_mode.to_string(),
        it.fixed_iterations.to_string(),
        it.max_iterations.to_string(),
        it.threshold_base.to_string(),
        it.threshold_step.to_string(),
        it.threshold_cap.to_string(),
        it.residual.to_string(),
    ];
    KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
}
