//! Interleaved multi-task training.
//!
//! Training walks a [`BatchPool`]: every task's data is split into
//! homogeneous mini-batches once, and each epoch visits the union of all
//! batches exactly once in a fresh seeded-random order. Tagging batches
//! apply the token-level cross-entropy loss through the tagging head;
//! sentence batches apply the binary cross-entropy loss through the
//! sentence head. Each batch triggers exactly one [`AdamW`] step at the
//! learning rate given by a [`LinearWarmupDecay`] schedule over all
//! `epochs × batches` steps.
//!
//! [`train`] runs the full epoch loop, scores the validation set after
//! every epoch, and returns the [`Checkpoint`] of the highest-scoring
//! epoch (first epoch wins ties). Validation data never reaches the
//! optimizer: gradients are computed from pool batches only, and the pool
//! is built exclusively from task datasets. [`multi_seed_run`] repeats
//! train-plus-test over consecutive seeds and reports per-run and mean
//! scores, carrying on past individual diverged runs.
//!
//! A non-finite loss aborts the epoch immediately with the offending
//! task, step, and the most recent loss values, rather than silently
//! corrupting the weights.

mod checkpoint;
mod optim;
mod pool;

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{
    aggregate_runs, strict_match_score, EvalError, MatchMode, MeanReport, ScoreReport,
};
use crate::labels::LabeledSequence;
use crate::model::{
    Gradients, LabelVocab, ModelError, TaggingModel, ToyEncoder, TrainableBackbone,
};
use crate::taskgen::{TaskDataset, TaskItems};

pub use checkpoint::Checkpoint;
pub use optim::{AdamW, LinearWarmupDecay};
pub use pool::{make_batch_pool, BatchPool, MiniBatch};

/// How many recent loss values the divergence diagnostic keeps.
const LOSS_HISTORY: usize = 8;

/// Offset that gives the batch shuffle its own random stream, so epoch
/// orders never mirror weight initialization for the same run seed.
const POOL_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// Errors from batching, training, and checkpoint handling.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("batch size must be at least 1, got {0}")]
    BadBatchSize(usize),
    #[error("run count must be at least 1, got {0}")]
    BadRunCount(usize),
    #[error("invalid training configuration: {field} {message}")]
    BadConfig {
        field: &'static str,
        message: String,
    },
    #[error("the {0} set is empty")]
    EmptyDataset(&'static str),
    #[error("no task datasets were provided")]
    NoTasks,
    #[error(
        "non-finite loss {loss} at epoch {epoch}, global step {step}, \
         task {task}; recent losses: {history:?}"
    )]
    NonFiniteLoss {
        epoch: usize,
        step: u64,
        task: String,
        loss: f64,
        history: Vec<f64>,
    },
    #[error("invalid checkpoint at {path}: {message}")]
    BadCheckpoint { path: PathBuf, message: String },
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("could not write the step log: {0}")]
    StepLog(std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The validation score that picks the best epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMetric {
    /// Strict-match F1 where span boundaries and type must both agree.
    WithTypeF1,
    /// Strict-match F1 on span boundaries alone.
    WithoutTypeF1,
}

impl ValidationMetric {
    pub fn mode(self) -> MatchMode {
        match self {
            ValidationMetric::WithTypeF1 => MatchMode::WithType,
            ValidationMetric::WithoutTypeF1 => MatchMode::WithoutType,
        }
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Peak learning rate reached at the end of warmup.
    pub learning_rate: f64,
    /// Fraction of all steps spent ramping the rate up from zero.
    pub warmup_proportion: f64,
    pub epochs: usize,
    /// Mini-batch size, applied per task.
    pub batch_size: usize,
    /// Seeds weight initialization and the epoch shuffle.
    pub seed: u64,
    pub validation_metric: ValidationMetric,
    /// Decoupled weight decay applied by the optimizer.
    pub weight_decay: f64,
    /// Gradient clipping threshold on the global norm.
    pub max_grad_norm: f64,
    /// Whether the classification heads carry bias terms.
    pub head_bias: bool,
    /// Maximum subword positions per sentence; longer ones are truncated.
    pub max_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 7e-6,
            warmup_proportion: 0.1,
            epochs: 50,
            batch_size: 32,
            seed: 42,
            validation_metric: ValidationMetric::WithoutTypeF1,
            weight_decay: 0.01,
            max_grad_norm: 1.0,
            head_bias: true,
            max_len: 128,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |field: &'static str, message: &str| TrainError::BadConfig {
            field,
            message: message.to_string(),
        };
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(bad("learning_rate", "must be finite and positive"));
        }
        if !(self.warmup_proportion > 0.0 && self.warmup_proportion < 1.0) {
            return Err(bad("warmup_proportion", "must lie strictly between 0 and 1"));
        }
        if self.epochs < 1 {
            return Err(bad("epochs", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(TrainError::BadBatchSize(self.batch_size));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(bad("weight_decay", "must be finite and non-negative"));
        }
        if !(self.max_grad_norm.is_finite() && self.max_grad_norm > 0.0) {
            return Err(bad("max_grad_norm", "must be finite and positive"));
        }
        if self.max_len < 1 {
            return Err(bad("max_len", "must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form; two configs share a digest
    /// exactly when every field agrees.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One line of the JSONL training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Zero-based global optimizer step.
    pub step: u64,
    /// Tag of the task the batch came from, e.g. `primary_en2fr`.
    pub task_kind: String,
    pub loss: f64,
    /// Learning rate the step was applied at.
    pub lr: f64,
}

/// What one pass over the batch pool did.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch index.
    pub epoch: usize,
    /// Optimizer steps taken; always the pool size.
    pub steps: usize,
    pub total_loss: f64,
    pub mean_loss: f64,
    /// Steps per task tag; sums to `steps`.
    pub task_steps: BTreeMap<String, usize>,
}

/// The epoch loop's mutable state: model, optimizer, schedule, and pool.
pub struct Trainer {
    model: TaggingModel<ToyEncoder>,
    pool: BatchPool,
    optimizer: AdamW,
    schedule: LinearWarmupDecay,
    config: TrainConfig,
    global_step: u64,
    epochs_run: usize,
    recent_losses: VecDeque<f64>,
}

impl Trainer {
    /// Builds the model, optimizer, schedule, and batch pool for `config`.
    pub fn new(tasks: &[TaskDataset], config: &TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        if tasks.is_empty() {
            return Err(TrainError::NoTasks);
        }
        let mut model =
            TaggingModel::toy_with_options(LabelVocab::full(), config.seed, config.head_bias);
        model.max_len = config.max_len;
        let pool = make_batch_pool(
            tasks,
            config.batch_size,
            config.seed ^ POOL_SEED_OFFSET,
        )?;
        let total_steps = pool.len() * config.epochs;
        let schedule =
            LinearWarmupDecay::new(config.learning_rate, config.warmup_proportion, total_steps);
        Ok(Trainer {
            model,
            pool,
            optimizer: AdamW::new(config.weight_decay),
            schedule,
            config: config.clone(),
            global_step: 0,
            epochs_run: 0,
            recent_losses: VecDeque::with_capacity(LOSS_HISTORY),
        })
    }

    pub fn model(&self) -> &TaggingModel<ToyEncoder> {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut TaggingModel<ToyEncoder> {
        &mut self.model
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    /// Visits every batch once in a fresh random order, taking one
    /// optimizer step per batch. Appends one [`StepRecord`] per step to
    /// `step_log` when given (`&mut None` disables logging).
    pub fn run_epoch(
        &mut self,
        step_log: &mut Option<&mut dyn Write>,
    ) -> Result<EpochStats, TrainError> {
        self.epochs_run += 1;
        let order = self.pool.epoch_order();
        let mut stats = EpochStats {
            epoch: self.epochs_run,
            steps: 0,
            total_loss: 0.0,
            mean_loss: 0.0,
            task_steps: BTreeMap::new(),
        };
        for batch_index in order {
            let batch = &self.pool.batches()[batch_index];
            let tag = batch.kind.tag();
            let mut grads = Gradients::new();
            let loss = match &batch.items {
                TaskItems::Primary(seqs) => {
                    let aligned = self.model.align(seqs)?;
                    self.model.primary_batch_loss_with_grad(&aligned, &mut grads)?
                }
                TaskItems::Secondary(samples) => {
                    let texts: Vec<&str> = samples.iter().map(|s| s.text.as_str()).collect();
                    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
                    let aligned = self.model.align_texts(&texts);
                    self.model
                        .secondary_batch_loss_with_grad(&aligned, &labels, &mut grads)?
                }
            };
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch: self.epochs_run,
                    step: self.global_step,
                    task: tag,
                    loss,
                    history: self.recent_losses.iter().copied().collect(),
                });
            }
            grads.clip_global_norm(self.config.max_grad_norm);
            let lr = self.schedule.lr_at(self.global_step as usize);
            self.optimizer.step(&mut self.model, &grads, lr);
            if let Some(w) = step_log.as_deref_mut() {
                let record = StepRecord {
                    step: self.global_step,
                    task_kind: tag.clone(),
                    loss,
                    lr,
                };
                let line = serde_json::to_string(&record).expect("record serializes");
                writeln!(w, "{line}").map_err(TrainError::StepLog)?;
            }
            if self.recent_losses.len() == LOSS_HISTORY {
                self.recent_losses.pop_front();
            }
            self.recent_losses.push_back(loss);
            self.global_step += 1;
            stats.steps += 1;
            stats.total_loss += loss;
            *stats.task_steps.entry(tag).or_insert(0) += 1;
        }
        stats.mean_loss = stats.total_loss / stats.steps as f64;
        log::debug!(
            "epoch {}: {} steps, mean loss {:.6}",
            stats.epoch,
            stats.steps,
            stats.mean_loss
        );
        Ok(stats)
    }

    /// Scores the current model on `gold` under the metric's match mode.
    pub fn validation_score(
        &self,
        gold: &[LabeledSequence],
        metric: ValidationMetric,
    ) -> Result<ScoreReport, TrainError> {
        evaluate_model(&self.model, gold, metric.mode())
    }
}

/// Tags `gold` with the model and scores the result against it.
pub fn evaluate_model<B: TrainableBackbone>(
    model: &TaggingModel<B>,
    gold: &[LabeledSequence],
    mode: MatchMode,
) -> Result<ScoreReport, TrainError> {
    if gold.is_empty() {
        return Err(TrainError::EmptyDataset("evaluation"));
    }
    let predicted = model.predict_sequences(gold);
    let pred: Vec<LabeledSequence> = gold
        .iter()
        .zip(predicted)
        .map(|(g, labels)| LabeledSequence {
            doc_id: g.doc_id.clone(),
            sent_index: g.sent_index,
            language: g.language.clone(),
            tokens: g.tokens.clone(),
            labels,
        })
        .collect();
    Ok(strict_match_score(&pred, gold, mode)?)
}

/// Index of the first maximum score; `None` on an empty slice.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &score) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// A finished training run: best checkpoint plus the epoch trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Validation metric after each epoch, in epoch order.
    pub epoch_scores: Vec<f64>,
    pub total_steps: u64,
}

/// Runs the full epoch loop and returns the best checkpoint by
/// validation score, along with per-epoch scores.
///
/// The validation set is scored after every epoch and never contributes
/// a gradient. Ties between epochs go to the earlier one.
pub fn train(
    config: &TrainConfig,
    tasks: &[TaskDataset],
    validation: &[LabeledSequence],
    mut step_log: Option<&mut dyn Write>,
) -> Result<TrainOutcome, TrainError> {
    if validation.is_empty() {
        return Err(TrainError::EmptyDataset("validation"));
    }
    let mut trainer = Trainer::new(tasks, config)?;
    let mut epoch_scores = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, TaggingModel<ToyEncoder>, ScoreReport)> = None;
    for _ in 0..config.epochs {
        trainer.run_epoch(&mut step_log)?;
        let report = trainer.validation_score(validation, config.validation_metric)?;
        let score = report.f1;
        epoch_scores.push(score);
        if best.as_ref().is_none_or(|(b, _, _, _)| score > *b) {
            best = Some((score, trainer.epochs_run(), trainer.model().clone(), report));
        }
    }
    let (_, epoch, model, validation_report) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model,
            epoch,
            seed: config.seed,
            config_digest: config.digest(),
            validation: validation_report,
        },
        epoch_scores,
        total_steps: trainer.global_step(),
    })
}

/// One seed's train-plus-test result.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub checkpoint: Checkpoint,
    /// Test-set score with type identity required for a match.
    pub with_type: ScoreReport,
    /// Test-set score on span boundaries alone.
    pub without_type: ScoreReport,
}

/// A run that did not finish, with the seed it was started from.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub seed: u64,
    pub message: String,
}

/// Per-run and averaged results over several seeds.
#[derive(Debug, Clone)]
pub struct MultiSeedOutcome {
    pub runs: Vec<RunOutcome>,
    pub failures: Vec<RunFailure>,
    /// Mean over finished runs; `None` when every run failed.
    pub mean_with_type: Option<MeanReport>,
    pub mean_without_type: Option<MeanReport>,
}

/// Supplies a fresh step-log writer for the run with the given seed.
pub type StepLogFactory<'a> = &'a mut dyn FnMut(u64) -> std::io::Result<Box<dyn Write>>;

/// Trains and tests once per seed `config.seed + 0 .. n_runs`, reporting
/// per-run scores and their arithmetic mean.
///
/// A run that diverges is recorded as a failure and the remaining seeds
/// still run; means cover the finished runs only.
pub fn multi_seed_run(
    config: &TrainConfig,
    tasks: &[TaskDataset],
    validation: &[LabeledSequence],
    test: &[LabeledSequence],
    n_runs: usize,
    step_logs: Option<StepLogFactory<'_>>,
) -> Result<MultiSeedOutcome, TrainError> {
    if n_runs < 1 {
        return Err(TrainError::BadRunCount(n_runs));
    }
    let seeds: Vec<u64> = (0..n_runs as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    multi_seed_run_with_seeds(config, tasks, validation, test, &seeds, step_logs)
}

/// [`multi_seed_run`] with the seed list given explicitly.
pub fn multi_seed_run_with_seeds(
    config: &TrainConfig,
    tasks: &[TaskDataset],
    validation: &[LabeledSequence],
    test: &[LabeledSequence],
    seeds: &[u64],
    mut step_logs: Option<StepLogFactory<'_>>,
) -> Result<MultiSeedOutcome, TrainError> {
    if seeds.is_empty() {
        return Err(TrainError::BadRunCount(0));
    }
    config.validate()?;
    if test.is_empty() {
        return Err(TrainError::EmptyDataset("test"));
    }
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for &seed in seeds {
        let run_config = TrainConfig {
            seed,
            ..config.clone()
        };
        let mut writer = match step_logs.as_deref_mut() {
            Some(make) => Some(make(seed).map_err(TrainError::StepLog)?),
            None => None,
        };
        let log = writer.as_deref_mut().map(|w| w as &mut dyn Write);
        let outcome = train(&run_config, tasks, validation, log);
        match outcome {
            Ok(outcome) => {
                let with_type =
                    evaluate_model(&outcome.checkpoint.model, test, MatchMode::WithType)?;
                let without_type =
                    evaluate_model(&outcome.checkpoint.model, test, MatchMode::WithoutType)?;
                runs.push(RunOutcome {
                    seed,
                    checkpoint: outcome.checkpoint,
                    with_type,
                    without_type,
                });
            }
            Err(e @ TrainError::NonFiniteLoss { .. }) => {
                log::warn!("run with seed {seed} diverged: {e}");
                failures.push(RunFailure {
                    seed,
                    message: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let mean_of = |pick: fn(&RunOutcome) -> &ScoreReport| -> Result<Option<MeanReport>, EvalError> {
        if runs.is_empty() {
            return Ok(None);
        }
        let reports: Vec<ScoreReport> = runs.iter().map(|r| pick(r).clone()).collect();
        aggregate_runs(&reports).map(Some)
    };
    let mean_with_type = mean_of(|r| &r.with_type)?;
    let mean_without_type = mean_of(|r| &r.without_type)?;
    Ok(MultiSeedOutcome {
        runs,
        failures,
        mean_with_type,
        mean_without_type,
    })
}
