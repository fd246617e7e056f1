//! Training loop with validation-based early stopping.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{bt_loss, bt_loss_grad, mse_loss_grad};
use super::mlp::{Mode, MlpModel, Real, RunningStats};
use super::pairs::{enumerate_pairs, split_pairs, subsample, Pair, SplitPairs};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// A validation loss counts as an improvement only if it drops by at least this much.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

/// Smallest item batch used for batch-norm statistics when minibatching.
pub const MIN_BATCH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPhaseConfig {
    pub max_epochs: usize,
    pub patience_epochs: usize,
    pub validate_every: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Share of pairs (or items, for squared error) used for training.
    pub train_fraction: f64,
    /// Items per optimizer step; `None` trains full-batch.
    pub batch_size: Option<usize>,
    /// Upper bound on enumerated pairs; larger sets are subsampled uniformly.
    pub max_pairs: Option<usize>,
}

impl TrainPhaseConfig {
    /// Naturalness pretraining: 50 epochs, patience 20, validation every 5.
    pub fn warm_start() -> Self {
        TrainPhaseConfig {
            max_epochs: 50,
            patience_epochs: 20,
            validate_every: 5,
            learning_rate: 3e-4,
            weight_decay: 1e-5,
            train_fraction: 0.8,
            batch_size: Some(32),
            max_pairs: None,
        }
    }

    /// Fine-tuning on measured activities: 200 epochs, patience 40, validation every 10.
    pub fn activity() -> Self {
        TrainPhaseConfig {
            max_epochs: 200,
            patience_epochs: 40,
            validate_every: 10,
            learning_rate: 3e-4,
            weight_decay: 1e-5,
            train_fraction: 0.8,
            batch_size: None,
            max_pairs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patience_epochs == 0 || self.validate_every == 0 {
            return Err(Error::InvalidParameter("patience and validation interval must be positive".into()));
        }
        if self.patience_epochs < self.validate_every {
            return Err(Error::InvalidParameter("patience must be at least the validation interval".into()));
        }
        if !(self.learning_rate > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::InvalidParameter("train fraction must lie in (0, 1]".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    BradleyTerry,
    SquaredError,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub validation: Vec<(usize, f64)>,
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
    pub n_train: usize,
    pub n_validation: usize,
}

enum Split {
    Pairs(SplitPairs),
    Items { train: Vec<usize>, validation: Vec<usize> },
}

impl Split {
    fn has_validation(&self) -> bool {
        match self {
            Split::Pairs(s) => !s.validation.is_empty(),
            Split::Items { validation, .. } => !validation.is_empty(),
        }
    }
}

/// Best validation loss, its epoch, parameters and batch-norm statistics.
type Snapshot<T> = (f64, usize, Vec<T>, Vec<RunningStats<T>>);

fn to_f64<T: Real>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

fn from_f64<T: Real>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::from_f64(x).unwrap_or_else(T::zero)).collect()
}

fn build_split(labels: &[f64], phase: &TrainPhaseConfig, objective: Objective, seed: u64) -> Result<Split> {
    let mut split_rng = rng::stream(seed, tag::SPLIT);
    match objective {
        Objective::BradleyTerry => {
            let mut set = enumerate_pairs(labels)?;
            if set.pairs.is_empty() {
                return Err(Error::DegeneratePairs);
            }
            if let Some(max) = phase.max_pairs {
                set = subsample(&set, max, &mut rng::stream(seed, tag::SUBSAMPLE));
            }
            Ok(Split::Pairs(split_pairs(&set, phase.train_fraction, &mut split_rng)))
        }
        Objective::SquaredError => {
            if labels.len() < 2 {
                return Err(Error::TooFewRecords {
                    needed: 2,
                    found: labels.len(),
                });
            }
            let mut idx: Vec<usize> = (0..labels.len()).collect();
            idx.shuffle(&mut split_rng);
            let n_train = (libm::round(phase.train_fraction * idx.len() as f64) as usize).clamp(1, idx.len());
            let validation = idx.split_off(n_train);
            Ok(Split::Items { train: idx, validation })
        }
    }
}

/// Item batches for one epoch. The last chunk is merged into its neighbour
/// when smaller than [`MIN_BATCH`].
fn epoch_batches(n: usize, batch_size: Option<usize>, rng: &mut rng::Rng) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..n).collect();
    let size = match batch_size {
        Some(b) if b < n => b.max(MIN_BATCH),
        _ => return vec![all],
    };
    let mut order = all;
    order.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = order.chunks(size).map(|c| c.to_vec()).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < MIN_BATCH) {
        let tail = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(tail);
    }
    batches
}

fn validation_loss<T: Real>(model: &mut MlpModel<T>, inputs: &[T], labels: &[f64], split: &Split) -> Result<f64> {
    model.set_mode(Mode::Eval);
    let scores = to_f64(&model.predict(inputs)?);
    model.set_mode(Mode::Train);
    match split {
        Split::Pairs(s) => bt_loss(&scores, &s.validation),
        Split::Items { validation, .. } => Ok(mse_loss_grad(&scores, labels, validation)?.0),
    }
}

/// Trains `model` on `inputs` (row-major, one row per label) with Adam,
/// checking validation loss every `validate_every` epochs and stopping once it
/// has not improved for `patience_epochs`. The best-validation weights are
/// restored. Returns with the model in eval mode.
pub fn train_model<T: Real>(
    model: &mut MlpModel<T>,
    inputs: &[T],
    labels: &[f64],
    phase: &TrainPhaseConfig,
    objective: Objective,
    seed: u64,
) -> Result<History> {
    phase.validate()?;
    let d = model.input_dim();
    if inputs.len() != labels.len() * d {
        return Err(Error::DimensionMismatch {
            expected: labels.len() * d,
            found: inputs.len(),
        });
    }
    let mut history = History::default();
    if phase.max_epochs == 0 {
        model.set_mode(Mode::Eval);
        return Ok(history);
    }
    let split = build_split(labels, phase, objective, seed)?;
    match &split {
        Split::Pairs(s) => {
            history.n_train = s.train.len();
            history.n_validation = s.validation.len();
        }
        Split::Items { train, validation } => {
            history.n_train = train.len();
            history.n_validation = validation.len();
        }
    }

    let n = labels.len();
    let minibatching = matches!(phase.batch_size, Some(b) if b < n);
    // Dense train-role lookup for assembling within-batch pairs.
    let mut is_train_pair = Vec::new();
    let mut is_train_item = vec![false; n];
    match &split {
        Split::Pairs(s) if minibatching => {
            is_train_pair = vec![false; n * n];
            for p in &s.train {
                is_train_pair[p.winner * n + p.loser] = true;
            }
        }
        Split::Items { train, .. } => {
            for &i in train {
                is_train_item[i] = true;
            }
        }
        _ => {}
    }

    let mut optimizer = Adam::<T>::new(model.params().len(), phase.learning_rate, phase.weight_decay);
    let mut dropout_rng = rng::stream(seed, tag::DROPOUT);
    let mut shuffle_rng = rng::stream(seed, tag::SHUFFLE);
    let mut best: Option<Snapshot<T>> = None;
    model.set_mode(Mode::Train);

    for epoch in 1..=phase.max_epochs {
        let mut epoch_loss = 0.0;
        let mut epoch_weight = 0usize;
        for batch in epoch_batches(n, phase.batch_size, &mut shuffle_rng) {
            let full = batch.len() == n;
            let mut local_inputs = Vec::with_capacity(batch.len() * d);
            for &i in &batch {
                local_inputs.extend_from_slice(&inputs[i * d..(i + 1) * d]);
            }
            let cache = model.forward_train(&local_inputs, &mut dropout_rng)?;
            let scores = to_f64(&cache.output);
            let (loss, weight, grad) = match &split {
                Split::Pairs(s) => {
                    let local_pairs: Vec<Pair> = if full {
                        s.train.clone()
                    } else {
                        let mut out = Vec::new();
                        for (a, &ia) in batch.iter().enumerate() {
                            for (b, &ib) in batch.iter().enumerate() {
                                if is_train_pair[ia * n + ib] {
                                    out.push(Pair { winner: a, loser: b });
                                }
                            }
                        }
                        out
                    };
                    if local_pairs.is_empty() {
                        continue;
                    }
                    let (l, g) = bt_loss_grad(&scores, &local_pairs)?;
                    (l, local_pairs.len(), g)
                }
                Split::Items { .. } => {
                    let local_labels: Vec<f64> = batch.iter().map(|&i| labels[i]).collect();
                    let items: Vec<usize> = (0..batch.len()).filter(|&a| is_train_item[batch[a]]).collect();
                    if items.is_empty() {
                        continue;
                    }
                    let (l, g) = mse_loss_grad(&scores, &local_labels, &items)?;
                    (l, items.len(), g)
                }
            };
            let grad = model.backward(&cache, &from_f64::<T>(&grad));
            model.update_running_stats(&cache);
            optimizer.step(model.params_mut(), &grad);
            epoch_loss += loss * weight as f64;
            epoch_weight += weight;
        }
        history.train_loss.push(if epoch_weight > 0 {
            epoch_loss / epoch_weight as f64
        } else {
            f64::NAN
        });
        history.epochs_run = epoch;

        if epoch % phase.validate_every == 0 && split.has_validation() {
            let vl = validation_loss(model, inputs, labels, &split)?;
            history.validation.push((epoch, vl));
            match &best {
                Some((best_loss, _, _, _)) if !(vl < best_loss - MIN_IMPROVEMENT) => {}
                _ => {
                    best = Some((vl, epoch, model.params().to_vec(), model.running_stats().to_vec()));
                }
            }
            let best_epoch = best.as_ref().map(|b| b.1).unwrap_or(epoch);
            if epoch - best_epoch >= phase.patience_epochs {
                break;
            }
        }
    }

    if let Some((_, epoch, params, running)) = best {
        model.restore(&params, &running);
        history.best_epoch = Some(epoch);
    }
    model.set_mode(Mode::Eval);
    Ok(history)
}
