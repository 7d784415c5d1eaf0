//! Training loop: seeded mini-batch Adam with checkpointing, early
//! stopping and learning-rate reduction on plateau, all driven by the
//! validation loss.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{bce_from_logit, logits_with, loss_and_gradients, sigmoid};
use super::model::Model;
use super::optim::{adam_step, AdamState};
use crate::data::{augment, AugmentConfig, Label};
use crate::error::{Error, Result};
use crate::image::{prepare, DomainKind, ImageTensor};
use crate::rng::rng_from;

/// Minimum decrease of the validation loss that counts as an improvement
/// and resets both the plateau and the early-stop counter. Checkpointing
/// takes any strict decrease.
pub const MIN_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub early_stop_patience: usize,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_lr: f64,
    /// Apply `augmentation` to training inputs.
    pub augment: bool,
    pub augmentation: AugmentConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 32,
            max_epochs: 50,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            early_stop_patience: 10,
            plateau_patience: 5,
            plateau_factor: 0.5,
            min_lr: 1e-6,
            augment: true,
            augmentation: AugmentConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Comparisons are negated so that NaN fields are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be at least 1");
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return bad("plateau_factor must lie in (0, 1)");
        }
        if self.early_stop_patience == 0 || self.plateau_patience == 0 {
            return bad("patience values must be at least 1");
        }
        if !(self.min_lr >= 0.0) {
            return bad("min_lr must be non-negative");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps > 0.0) {
            return bad("Adam betas must lie in [0, 1) and eps must be positive");
        }
        self.augmentation.validate()?;
        Ok(())
    }
}

/// What the monitor decided after one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorStep {
    /// Lowest validation loss so far: snapshot the parameters.
    pub checkpoint: bool,
    /// Learning rate for the next epoch.
    pub next_lr: f64,
    pub stop: bool,
}

/// Checkpoint, plateau and early-stop bookkeeping on the validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMonitor {
    best: f64,
    improved_best: f64,
    wait: usize,
    plateau_wait: usize,
    lr: f64,
    early_stop_patience: usize,
    plateau_patience: usize,
    plateau_factor: f64,
    min_lr: f64,
}

impl TrainingMonitor {
    pub fn new(cfg: &TrainConfig) -> Self {
        TrainingMonitor {
            best: f64::INFINITY,
            improved_best: f64::INFINITY,
            wait: 0,
            plateau_wait: 0,
            lr: cfg.learning_rate,
            early_stop_patience: cfg.early_stop_patience,
            plateau_patience: cfg.plateau_patience,
            plateau_factor: cfg.plateau_factor,
            min_lr: cfg.min_lr,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn observe(&mut self, val_loss: f64) -> MonitorStep {
        let checkpoint = val_loss < self.best;
        if checkpoint {
            self.best = val_loss;
        }
        if val_loss < self.improved_best - MIN_DELTA {
            self.improved_best = val_loss;
            self.wait = 0;
            self.plateau_wait = 0;
        } else {
            self.wait += 1;
            self.plateau_wait += 1;
            if self.plateau_wait >= self.plateau_patience {
                self.lr = (self.lr * self.plateau_factor).max(self.min_lr);
                self.plateau_wait = 0;
            }
        }
        MonitorStep {
            checkpoint,
            next_lr: self.lr,
            stop: self.wait >= self.early_stop_patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub lr: f64,
    pub checkpointed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    /// The epoch whose parameters were returned.
    pub fn best_epoch(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.checkpointed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_acc,lr,checkpointed\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.8},{:.8},{:.6},{:e},{}\n",
                e.epoch, e.train_loss, e.val_loss, e.val_acc, e.lr, e.checkpointed
            ));
        }
        out
    }
}

/// A raw image with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub image: ImageTensor,
    pub label: Label,
}

/// Classifier inputs for `images`, prepared in parallel.
pub fn prepare_all(images: &[&ImageTensor], domain: DomainKind, side: usize) -> Result<Vec<ImageTensor>> {
    images.par_iter().map(|img| prepare(img, domain, side)).collect()
}

const SHUFFLE_STREAM: u64 = 1;
const AUGMENT_STREAM: u64 = 2;

/// Mean fused loss and accuracy at probability 0.5.
fn evaluate_split(model: &Model, inputs: &[ImageTensor], labels: &[f64]) -> Result<(f64, f64)> {
    let logits = logits_with(model.config(), &model.params_f64(), inputs)?;
    let n = labels.len() as f64;
    let loss = logits.iter().zip(labels).map(|(&z, &y)| bce_from_logit(z, y)).sum::<f64>() / n;
    let correct = logits
        .iter()
        .zip(labels)
        .filter(|(&z, &y)| (sigmoid(z) >= 0.5) == (y == 1.0))
        .count();
    Ok((loss, correct as f64 / n))
}

pub fn train(
    model: &Model,
    train_items: &[Example],
    val_items: &[Example],
    tcfg: &TrainConfig,
    domain: DomainKind,
) -> Result<(Model, TrainHistory)> {
    train_with_progress(model, train_items, val_items, tcfg, domain, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress(
    model: &Model,
    train_items: &[Example],
    val_items: &[Example],
    tcfg: &TrainConfig,
    domain: DomainKind,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model, TrainHistory)> {
    if train_items.is_empty() {
        return Err(Error::EmptyDataset("training set is empty".into()));
    }
    if val_items.is_empty() {
        return Err(Error::EmptyDataset("validation set is empty".into()));
    }
    tcfg.validate()?;
    let side = model.config().input_side;
    let cfg = model.config().clone();
    let images: Vec<&ImageTensor> = train_items.iter().map(|e| &e.image).collect();
    let train_inputs = prepare_all(&images, domain, side)?;
    let train_labels: Vec<f64> = train_items.iter().map(|e| f64::from(e.label.as_u8())).collect();
    let images: Vec<&ImageTensor> = val_items.iter().map(|e| &e.image).collect();
    let val_inputs = prepare_all(&images, domain, side)?;
    let val_labels: Vec<f64> = val_items.iter().map(|e| f64::from(e.label.as_u8())).collect();

    let mut current = model.clone();
    current.training_seed = Some(tcfg.seed);
    let mut best = current.clone();
    let mut best_epoch = 0;
    let mut adam = AdamState::new(current.param_count(), tcfg.adam_beta1, tcfg.adam_beta2, tcfg.adam_eps);
    let mut monitor = TrainingMonitor::new(tcfg);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_inputs.len()).collect();

    for epoch in 1..=tcfg.max_epochs {
        let lr = monitor.lr();
        order.sort_unstable();
        order.shuffle(&mut rng_from(&[tcfg.seed, SHUFFLE_STREAM, epoch as u64]));
        let mut loss_sum = 0.0;
        for chunk in order.chunks(tcfg.batch_size) {
            let batch: Vec<ImageTensor> = chunk
                .par_iter()
                .map(|&i| {
                    if tcfg.augment {
                        let mut rng = rng_from(&[tcfg.seed, AUGMENT_STREAM, epoch as u64, i as u64]);
                        augment(&train_inputs[i], &tcfg.augmentation, &mut rng)
                    } else {
                        train_inputs[i].clone()
                    }
                })
                .collect();
            let labels: Vec<f64> = chunk.iter().map(|&i| train_labels[i]).collect();
            let (loss, grad) = loss_and_gradients(&cfg, &current.params_f64(), &batch, &labels)?;
            loss_sum += loss * chunk.len() as f64;
            adam_step(&mut adam, current.params_mut(), &grad, lr)?;
        }
        let (val_loss, val_acc) = evaluate_split(&current, &val_inputs, &val_labels)?;
        let step = monitor.observe(val_loss);
        if step.checkpoint {
            best = current.clone();
            best_epoch = epoch;
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_inputs.len() as f64,
            val_loss,
            val_acc,
            lr,
            checkpointed: step.checkpoint,
        };
        on_epoch(&record);
        history.epochs.push(record);
        if step.stop {
            break;
        }
    }
    if best_epoch == 0 {
        // Every validation loss was NaN; fall back to the final weights.
        best = current;
        best_epoch = history.epochs.len();
    }
    for e in &mut history.epochs {
        e.checkpointed = e.epoch == best_epoch;
    }
    Ok((best, history))
}

/// Probabilities for raw images, prepared for `domain` and never augmented.
pub fn predict(model: &Model, images: &[ImageTensor], domain: DomainKind) -> Result<Vec<f64>> {
    let refs: Vec<&ImageTensor> = images.iter().collect();
    let inputs = prepare_all(&refs, domain, model.config().input_side)?;
    let logits = logits_with(model.config(), &model.params_f64(), &inputs)?;
    Ok(logits.into_iter().map(sigmoid).collect())
}
