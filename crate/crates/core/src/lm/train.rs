use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::batch::{batchify, BatchedCorpus};
use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use super::corpus::{Corpus, Vocab};
use super::model::{LanguageModel, Phase};
use crate::autograd::{clip_gradients, Parameters};
use crate::cell::IterationConfig;
use crate::math::Rng;
use crate::{Error, Result};

pub const LOG_FILE: &str = "train_log.jsonl";
pub const LAST_CHECKPOINT: &str = "checkpoint_last.json";
pub const BEST_CHECKPOINT: &str = "checkpoint_best.json";
pub const METRICS_FILE: &str = "metrics.json";

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_ppl: f64,
    pub valid_ppl: f64,
    pub wall_time: Option<f64>,
    /// Mean iterations per cell step during training.
    pub mean_iterations: f64,
}

#[derive(Debug, Clone)]
pub struct EpochReport {
    pub record: EpochRecord,
    /// Mean loss of every window, in order.
    pub window_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub perplexity: f64,
    pub mean_nll: f64,
    pub targets: usize,
    pub mean_iterations: f64,
}

/// Perplexity of `ids` under `model` with dropout off.
///
/// The split is laid out in `batch_size` contiguous lanes whose state runs
/// through consecutive windows. Splits too short for the requested layout are
/// evaluated with fewer lanes.
pub fn evaluate(
    model: &LanguageModel,
    cfg: &IterationConfig,
    ids: &[usize],
    batch_size: usize,
    unroll_length: usize,
) -> Result<EvalStats> {
    if ids.len() < 2 {
        return Err(Error::InvalidInput("evaluation split needs at least two tokens".into()));
    }
    let unroll = unroll_length.min(ids.len() - 1).max(1);
    let lanes = batch_size.min(ids.len() / (unroll + 1)).max(1);
    let batched = batchify(ids, lanes, unroll)?;
    let mut states = model.zero_states(lanes);
    let mut dummy = Rng::new(0);
    let (mut nll, mut targets, mut iters, mut steps) = (0.0, 0, 0, 0);
    for window in batched.windows() {
        let pass = model.forward_window(cfg, &window, &mut states, Phase::Eval, 1.0, &mut dummy)?;
        nll += pass.nll_sum;
        targets += pass.targets;
        iters += pass.iterations;
        steps += pass.cell_steps;
    }
    let mean_nll = nll / targets as f64;
    Ok(EvalStats {
        perplexity: mean_nll.exp(),
        mean_nll,
        targets,
        mean_iterations: iters as f64 / steps.max(1) as f64,
    })
}

pub fn evaluate_perplexity(
    model: &LanguageModel,
    cfg: &IterationConfig,
    ids: &[usize],
    batch_size: usize,
    unroll_length: usize,
) -> Result<f64> {
    evaluate(model, cfg, ids, batch_size, unroll_length).map(|s| s.perplexity)
}

/// Minibatch SGD state.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub vocab: Vocab,
    pub model: LanguageModel,
    rng: Rng,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed SGD steps.
    pub step: usize,
    pub best_valid_ppl: Option<f64>,
    pub best_epoch: Option<usize>,
}

impl Trainer {
    pub fn new(config: TrainConfig, vocab: Vocab) -> Result<Trainer> {
        config.validate()?;
        let mut rng = Rng::new(config.seed);
        let model = LanguageModel::uniform(
            vocab.len(),
            config.units,
            config.layers,
            config.init_range,
            config.init_margin,
            &mut rng,
        )?;
        Ok(Trainer {
            config,
            vocab,
            model,
            rng,
            epoch: 0,
            step: 0,
            best_valid_ppl: None,
            best_epoch: None,
        })
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Trainer> {
        ck.config.validate()?;
        Ok(Trainer {
            rng: Rng::from_state(ck.rng),
            config: ck.config,
            vocab: ck.vocab,
            model: ck.model,
            epoch: ck.epoch,
            step: ck.step,
            best_valid_ppl: ck.best_valid_ppl,
            best_epoch: ck.best_epoch,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            model: self.model.clone(),
            rng: self.rng.state(),
            epoch: self.epoch,
            step: self.step,
            best_valid_ppl: self.best_valid_ppl,
            best_epoch: self.best_epoch,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.config.epochs
    }

    /// Trains one epoch over `train` (state reset at the start, carried
    /// between windows) and measures validation perplexity.
    pub fn run_epoch(&mut self, train: &BatchedCorpus, valid: &[usize]) -> Result<EpochReport> {
        let cfg = &self.config;
        let epoch = self.epoch + 1;
        let lr = cfg.learning_rate(epoch)?;
        let started = Instant::now();
        let mut states = self.model.zero_states(train.batch_size());
        let mut grads = self.model.zeros_like();
        let (mut nll, mut targets, mut iters, mut steps) = (0.0, 0, 0, 0);
        let mut window_losses = Vec::with_capacity(train.window_count());
        let diverged = |step: usize, reason: String| Error::Divergence { epoch, step, reason };

        for window in train.windows() {
            let pass = self
                .model
                .forward_window(&cfg.iteration, &window, &mut states, Phase::Train, cfg.keep_prob, &mut self.rng)
                .map_err(|e| match e {
                    Error::NonFinite(m) => diverged(self.step + 1, m),
                    other => other,
                })?;
            grads.scale_all(0.0);
            self.model.backward_window(&pass, &mut grads)?;
            self.model.add_l2_gradient(cfg.l2, &mut grads);
            clip_gradients(&mut grads, cfg.clip_norm).map_err(|e| match e {
                Error::NonFinite(m) => diverged(self.step + 1, m),
                other => other,
            })?;
            self.model.add_scaled(-lr, &grads);
            self.step += 1;
            nll += pass.nll_sum;
            targets += pass.targets;
            iters += pass.iterations;
            steps += pass.cell_steps;
            window_losses.push(pass.loss);
        }
        let valid_ppl = evaluate_perplexity(
            &self.model,
            &cfg.iteration,
            valid,
            cfg.eval_batch_size,
            cfg.unroll_length,
        )?;
        if !valid_ppl.is_finite() {
            return Err(diverged(self.step, format!("validation perplexity {valid_ppl}")));
        }
        self.epoch = epoch;
        if self.best_valid_ppl.map_or(true, |b| valid_ppl < b) {
            self.best_valid_ppl = Some(valid_ppl);
            self.best_epoch = Some(epoch);
        }
        Ok(EpochReport {
            record: EpochRecord {
                epoch,
                lr,
                train_ppl: (nll / targets.max(1) as f64).exp(),
                valid_ppl,
                wall_time: cfg.log_wall_time.then(|| started.elapsed().as_secs_f64()),
                mean_iterations: iters as f64 / steps.max(1) as f64,
            },
            window_losses,
        })
    }
}

/// Final numbers of a training run, written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub parameters: usize,
    pub epochs: usize,
    pub final_valid_ppl: Option<f64>,
    pub best_valid_ppl: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Test perplexity of the final model.
    pub test_ppl: f64,
    /// Test perplexity of the best-validation model.
    pub best_test_ppl: Option<f64>,
    pub test_mean_iterations: f64,
}

/// Returned by the per-epoch callback of [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    /// Stop after this epoch; the run can be resumed from its checkpoint.
    Stop,
}

/// Where [`train`] writes its artifacts.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn new(root: &Path) -> Result<OutputDir> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }
}

/// Trains from scratch (or, given a checkpoint, from where it stopped) until
/// `config.epochs` epochs are done or `on_epoch` asks to stop.
///
/// With an output directory, each epoch appends a record to the log and
/// rewrites the last checkpoint; the best-validation checkpoint is rewritten
/// whenever validation improves. A divergence aborts the run and leaves the
/// checkpoints of the last good epoch in place. A fresh run truncates the
/// log, a resumed one appends to it.
pub fn train(
    trainer: &mut Trainer,
    corpus: &Corpus,
    out: Option<&OutputDir>,
    on_epoch: &mut dyn FnMut(&EpochRecord) -> Control,
) -> Result<TrainSummary> {
    let cfg = trainer.config.clone();
    if corpus.vocab != trainer.vocab {
        return Err(Error::Config("corpus vocabulary differs from the model's".into()));
    }
    let batched = batchify(&corpus.train, cfg.batch_size, cfg.unroll_length)?;
    let mut log = match out {
        Some(o) => {
            let path = o.path(LOG_FILE);
            let file = if trainer.epoch == 0 {
                File::create(&path)
            } else {
                OpenOptions::new().create(true).append(true).open(&path)
            };
            Some((file.map_err(|e| Error::io(&path, e))?, path))
        }
        None => None,
    };
    let mut best_model = match out {
        Some(o) if o.path(BEST_CHECKPOINT).is_file() && trainer.best_epoch.is_some() => {
            Some(Checkpoint::load(&o.path(BEST_CHECKPOINT))?.model)
        }
        _ => None,
    };
    let mut final_valid = None;
    while !trainer.is_finished() {
        let report = trainer.run_epoch(&batched, &corpus.valid)?;
        let rec = &report.record;
        final_valid = Some(rec.valid_ppl);
        let improved = trainer.best_epoch == Some(rec.epoch);
        if improved {
            best_model = Some(trainer.model.clone());
        }
        if let Some(o) = out {
            let ck = trainer.checkpoint();
            if improved {
                ck.save(&o.path(BEST_CHECKPOINT))?;
            }
            ck.save(&o.path(LAST_CHECKPOINT))?;
        }
        if let Some((file, path)) = log.as_mut() {
            let line = serde_json::to_string(rec)?;
            writeln!(file, "{line}").and_then(|_| file.flush()).map_err(|e| Error::io(&*path, e))?;
        }
        if on_epoch(rec) == Control::Stop {
            break;
        }
    }
    let test = evaluate(
        &trainer.model,
        &cfg.iteration,
        &corpus.test,
        cfg.eval_batch_size,
        cfg.unroll_length,
    )?;
    let best_test_ppl = match &best_model {
        Some(m) => Some(evaluate_perplexity(m, &cfg.iteration, &corpus.test, cfg.eval_batch_size, cfg.unroll_length)?),
        None => None,
    };
    let summary = TrainSummary {
        parameters: trainer.model.num_coords(),
        epochs: trainer.epoch,
        final_valid_ppl: final_valid,
        best_valid_ppl: trainer.best_valid_ppl,
        best_epoch: trainer.best_epoch,
        test_ppl: test.perplexity,
        best_test_ppl,
        test_mean_iterations: test.mean_iterations,
    };
    if let Some(o) = out {
        let path = o.path(METRICS_FILE);
        let json = serde_json::to_string_pretty(&summary)?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}
