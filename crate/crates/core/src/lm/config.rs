use serde::{Deserialize, Serialize};

use super::corpus::TokenMode;
use crate::cell::IterationConfig;
use crate::math::{Rng, Vector};
use crate::{Error, Result};

/// Training hyperparameters. The embedding width equals `units`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub layers: usize,
    pub units: usize,
    pub batch_size: usize,
    pub unroll_length: usize,
    pub epochs: usize,
    pub lr_base: f64,
    pub lr_constant_epochs: usize,
    pub lr_decay: f64,
    pub keep_prob: f64,
    /// Every parameter starts in `U(−init_range, init_range)`.
    pub init_range: f64,
    pub clip_norm: f64,
    pub iteration: IterationConfig,
    /// Coefficient of `½·l2·Σ|W_rec|²`; zero disables it.
    pub l2: f64,
    pub seed: u64,
    pub mode: TokenMode,
    /// If set, each layer's recurrent weights are rescaled to this
    /// convergence margin after initialisation.
    pub init_margin: Option<f64>,
    /// Batch size used for validation and test perplexity.
    pub eval_batch_size: usize,
    /// Record elapsed seconds in the training log. Off by default so logs
    /// of identical runs are byte-identical.
    pub log_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layers: 2,
            units: 650,
            batch_size: 20,
            unroll_length: 35,
            epochs: 39,
            lr_base: 1.0,
            lr_constant_epochs: 6,
            lr_decay: 1.2,
            keep_prob: 0.5,
            init_range: 0.5,
            clip_norm: 5.0,
            iteration: IterationConfig::default(),
            l2: 0.0,
            seed: 0,
            mode: TokenMode::Word,
            init_margin: None,
            eval_batch_size: 10,
            log_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("layers", self.layers),
            ("units", self.units),
            ("batch_size", self.batch_size),
            ("unroll_length", self.unroll_length),
            ("epochs", self.epochs),
            ("eval_batch_size", self.eval_batch_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let reals = [
            ("lr_base", self.lr_base),
            ("lr_decay", self.lr_decay),
            ("init_range", self.init_range),
            ("clip_norm", self.clip_norm),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Config(format!("keep_prob must lie in (0, 1], got {}", self.keep_prob)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("l2 must be non-negative, got {}", self.l2)));
        }
        if let Some(m) = self.init_margin {
            if !(m < 1.0 && m.is_finite()) {
                return Err(Error::Config(format!("init_margin must be finite and below 1, got {m}")));
            }
        }
        self.iteration.validate()
    }

    pub fn learning_rate(&self, epoch: usize) -> Result<f64> {
        lr_schedule(epoch, self.lr_base, self.lr_constant_epochs, self.lr_decay)
    }
}

/// Step size for 1-based `epoch`: `lr_base` for the first `constant_epochs`,
/// then divided by `decay` once per further epoch.
pub fn lr_schedule(epoch: usize, lr_base: f64, constant_epochs: usize, decay: f64) -> Result<f64> {
    if epoch == 0 {
        return Err(Error::InvalidInput("epochs are numbered from 1".into()));
    }
    if epoch <= constant_epochs {
        return Ok(lr_base);
    }
    let k = i32::try_from(epoch - constant_epochs).map_err(|_| Error::InvalidInput("epoch too large".into()))?;
    Ok(lr_base / decay.powi(k))
}

/// Inverted-dropout mask: each entry is `1/keep_prob` with probability
/// `keep_prob`, else 0. With `keep_prob = 1` no randomness is consumed.
pub fn dropout_mask(len: usize, keep_prob: f64, rng: &mut Rng) -> Result<Vector> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::InvalidInput(format!("keep_prob must lie in (0, 1], got {keep_prob}")));
    }
    if keep_prob == 1.0 {
        return Ok(Vector::filled(len, 1.0));
    }
    let scale = 1.0 / keep_prob;
    Ok((0..len).map(|_| if rng.bernoulli(keep_prob) { scale } else { 0.0 }).collect())
}
