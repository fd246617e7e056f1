//! Few-shot proposal steps shared by simulated and live campaigns: naturalness
//! warm-start, activity fine-tuning, candidate scoring and batch acquisition.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{EmbeddingStore, LogProbMatrix};
use crate::naturalness::warm_start_targets;
use crate::ranker::ensemble::{consensus_of, covariance_of, DEFAULT_MEMBERS};
use crate::ranker::{Ensemble, MlpConfig, Objective, TrainPhaseConfig};
use crate::rng;
use crate::selector::{constant_liar_select, top_n_select, ucb_score, ClOptions};
use crate::variant::{Sequence, Variant};

/// Index mixed into the base seed for the warm-start phase.
const WARM_START_STREAM: u64 = 0xFFFF;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleSettings {
    pub members: usize,
    pub hidden_dims: Vec<usize>,
    pub dropout: f64,
    /// Naturalness pretraining; `None` starts fine-tuning from random weights.
    pub warm_start: Option<TrainPhaseConfig>,
    pub activity: TrainPhaseConfig,
    pub objective: Objective,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings {
            members: DEFAULT_MEMBERS,
            hidden_dims: alloc::vec![100, 50],
            dropout: 0.2,
            warm_start: Some(TrainPhaseConfig::warm_start()),
            activity: TrainPhaseConfig::activity(),
            objective: Objective::BradleyTerry,
        }
    }
}

impl EnsembleSettings {
    pub fn mlp_config(&self, input_dim: usize, seed: u64) -> MlpConfig {
        let mut c = MlpConfig::new(input_dim);
        c.hidden_dims = self.hidden_dims.clone();
        c.dropout = self.dropout;
        c.seed = seed;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Acquisition {
    ConstantLiar(ClOptions),
    TopUcb { beta: f64 },
    TopMean,
}

/// Fresh ensemble, pretrained on naturalness of every single mutant when the
/// settings ask for it. Depends only on its arguments, so callers may cache it
/// across rounds.
pub fn warm_start_ensemble(
    reference: &Sequence,
    logprobs: &LogProbMatrix,
    embeddings: &EmbeddingStore,
    settings: &EnsembleSettings,
    seed: u64,
) -> Result<Ensemble<f32>> {
    let mut ensemble = Ensemble::new(settings.mlp_config(embeddings.dim(), seed), settings.members)?;
    if let Some(phase) = &settings.warm_start {
        let targets = warm_start_targets(reference, logprobs)?;
        let (variants, labels): (Vec<Variant>, Vec<f64>) = targets.into_iter().unzip();
        let inputs = embeddings.gather(&variants)?;
        ensemble.train(
            &inputs,
            &labels,
            phase,
            Objective::BradleyTerry,
            rng::derive(seed, WARM_START_STREAM),
        )?;
    }
    Ok(ensemble)
}

/// Fine-tunes every member of `ensemble` on measured activities.
pub fn fit_activity(
    ensemble: &mut Ensemble<f32>,
    embeddings: &EmbeddingStore,
    measured: &[(Variant, f64)],
    settings: &EnsembleSettings,
    seed: u64,
) -> Result<()> {
    let (variants, labels): (Vec<Variant>, Vec<f64>) = measured.iter().cloned().unzip();
    let inputs = embeddings.gather(&variants)?;
    ensemble.train(&inputs, &labels, &settings.activity, settings.objective, seed)?;
    Ok(())
}

/// Consensus scores and cross-member covariance over `candidates`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub consensus: Vec<f64>,
    pub covariance: Matrix,
}

pub fn score_candidates(ensemble: &Ensemble<f32>, embeddings: &EmbeddingStore, candidates: &[Variant]) -> Result<Scored> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidates"));
    }
    let preds = ensemble.member_predictions(&embeddings.gather(candidates)?)?;
    Ok(Scored {
        consensus: consensus_of(&preds)?,
        covariance: covariance_of(&preds)?,
    })
}

/// Indices into the scored candidates, in selection order.
pub fn acquire(scored: &Scored, n: usize, acquisition: &Acquisition) -> Result<Vec<usize>> {
    if n > scored.consensus.len() {
        return Err(Error::PoolExhausted);
    }
    match acquisition {
        Acquisition::ConstantLiar(options) => constant_liar_select(&scored.consensus, &scored.covariance, n, options),
        Acquisition::TopUcb { beta } => Ok(top_n_select(&ucb_score(&scored.consensus, &scored.covariance, *beta)?, n)),
        Acquisition::TopMean => Ok(top_n_select(&scored.consensus, n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn acquisition_modes_agree_without_covariance() {
        let scored = Scored {
            consensus: vec![0.1, 0.5, -0.2, 0.3],
            covariance: Matrix::zeros(4, 4),
        };
        let top = acquire(&scored, 2, &Acquisition::TopMean).unwrap();
        assert_eq!(top, vec![1, 3]);
        assert_eq!(acquire(&scored, 2, &Acquisition::TopUcb { beta: 1.0 }).unwrap(), top);
        assert_eq!(acquire(&scored, 2, &Acquisition::ConstantLiar(ClOptions::new(1.0))).unwrap(), top);
        assert_eq!(acquire(&scored, 5, &Acquisition::TopMean), Err(Error::PoolExhausted));
    }
}
