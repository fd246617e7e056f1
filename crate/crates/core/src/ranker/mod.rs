//! Ensemble of small ranking networks trained with a Bradley–Terry pair loss.

pub mod adam;
pub mod ensemble;
pub mod loss;
pub mod mlp;
pub mod pairs;
pub mod train;

pub use crate::naturalness::warm_start_targets;
pub use ensemble::{consensus_of, covariance_of, predict_consensus, prediction_covariance, Ensemble};
pub use loss::{bt_loss, bt_loss_grad};
pub use mlp::{Mode, MlpConfig, MlpModel, Real, RunningStats};
pub use pairs::{enumerate_pairs, split_pairs, Pair, PairSet, SplitPairs};
pub use train::{train_model, History, Objective, TrainPhaseConfig};
