//! Proposal computation for live campaigns. Pure given its inputs, so equal
//! histories and seeds give equal proposals.

use folde_core::model::{Dataset, EmbeddingStore, LogProbMatrix};
use folde_core::naturalness::{naturalness_score, zero_shot_select};
use folde_core::pipeline::{acquire, fit_activity, score_candidates, warm_start_ensemble, Acquisition};
use folde_core::ranker::Ensemble;
use folde_core::rng;
use folde_core::selector::{ucb_score, ClOptions};
use folde_core::sim::{batch_loci_diversity, expand_candidates, expansion_parents, Thresholds};
use folde_core::variant::Variant;
use serde::{Deserialize, Serialize};

use super::state::{CampaignRound, CampaignState, Proposal, Status};
use crate::error::{Error, Result};

const ENSEMBLE_STREAM: u64 = 0xE5;

/// Loaded artifacts of one campaign.
#[derive(Debug, Clone)]
pub struct CampaignInputs {
    pub embeddings: EmbeddingStore,
    pub logprobs: LogProbMatrix,
    pub truth: Option<Dataset>,
}

pub fn ensemble_seed(state: &CampaignState) -> u64 {
    rng::derive(state.config.seed, ENSEMBLE_STREAM)
}

/// Warm-started ensemble of a campaign; it depends only on the reference,
/// artifacts, settings and seed, so it can be cached across rounds.
pub fn warm_ensemble(state: &CampaignState, inputs: &CampaignInputs) -> Result<Ensemble<f32>> {
    Ok(warm_start_ensemble(
        &state.reference,
        &inputs.logprobs,
        &inputs.embeddings,
        &state.config.ensemble,
        ensemble_seed(state),
    )?)
}

/// Computes the next round without touching `state`. `warm` is the cached
/// warm-start ensemble, if any; the ensemble actually used is returned so the
/// caller can cache it.
pub fn propose_round(
    state: &CampaignState,
    inputs: &CampaignInputs,
    warm: Option<Ensemble<f32>>,
) -> Result<(CampaignRound, Option<Ensemble<f32>>)> {
    state.can_propose()?;
    let round = state.next_round();
    let proposed = state.proposed();
    let pool: Vec<Variant> = inputs
        .embeddings
        .rows()
        .iter()
        .map(|(v, _)| v)
        .filter(|v| !v.is_wild_type() && !proposed.contains(*v))
        .cloned()
        .collect();
    if pool.is_empty() {
        return Err(folde_core::Error::PoolExhausted.into());
    }
    for v in &pool {
        v.check_reference(&state.reference)?;
    }
    let n = state.config.batch_size.min(pool.len());
    let cfg = &state.config;

    if round == 1 {
        let picks = zero_shot_select(&pool, &inputs.logprobs, n, cfg.per_locus_cap)?;
        let proposals = picks
            .into_iter()
            .map(|variant| {
                Ok(Proposal {
                    naturalness: naturalness_score(&variant, &inputs.logprobs)?,
                    variant,
                    consensus: None,
                    ucb: None,
                })
            })
            .collect::<Result<_>>()?;
        return Ok((
            CampaignRound {
                round,
                alpha: None,
                proposals,
                measurements: Vec::new(),
                failed: Vec::new(),
            },
            warm,
        ));
    }

    let by_round = state.measured_by_round();
    let labelled: Vec<(Variant, f64)> = by_round.iter().flatten().cloned().collect();
    if labelled.len() < 2 {
        return Err(Error::Invalid(format!(
            "round {round} needs at least 2 measured variants, have {}",
            labelled.len()
        )));
    }
    let parents = expansion_parents(&by_round, cfg.parents_per_round);
    let candidates = match expand_candidates(&parents, &pool, &proposed) {
        Ok(c) if c.len() >= n => c,
        _ => pool.clone(),
    };
    let warm = match (warm, cfg.ensemble.warm_start.is_some()) {
        (Some(w), true) => w,
        _ => warm_ensemble(state, inputs)?,
    };
    let mut ensemble = warm.clone();
    fit_activity(
        &mut ensemble,
        &inputs.embeddings,
        &labelled,
        &cfg.ensemble,
        rng::derive(ensemble_seed(state), round as u64),
    )?;
    let scored = score_candidates(&ensemble, &inputs.embeddings, &candidates)?;
    let alpha = cfg.alpha(round);
    let options = ClOptions {
        alpha,
        beta: cfg.beta,
        placement: cfg.noise_placement,
    };
    let picks = acquire(&scored, n, &Acquisition::ConstantLiar(options))?;
    let ucb = ucb_score(&scored.consensus, &scored.covariance, cfg.beta)?;
    let proposals = picks
        .into_iter()
        .map(|k| {
            Ok(Proposal {
                naturalness: naturalness_score(&candidates[k], &inputs.logprobs)?,
                variant: candidates[k].clone(),
                consensus: Some(scored.consensus[k]),
                ucb: Some(ucb[k]),
            })
        })
        .collect::<Result<_>>()?;
    Ok((
        CampaignRound {
            round,
            alpha: Some(alpha),
            proposals,
            measurements: Vec::new(),
            failed: Vec::new(),
        },
        cfg.ensemble.warm_start.is_some().then_some(warm),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub proposed: usize,
    pub measured: usize,
    pub failed: usize,
    pub unique_loci: usize,
    pub new_loci: usize,
    pub best_activity: Option<f64>,
    pub mean_activity: Option<f64>,
    /// Present when a ground-truth dataset is attached.
    pub cumulative_hits: Option<usize>,
    pub top_percentile_found: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignMetrics {
    pub id: String,
    pub status: Status,
    pub rounds: Vec<RoundMetrics>,
}

pub fn campaign_metrics(state: &CampaignState, truth: Option<&Dataset>) -> Result<CampaignMetrics> {
    let thresholds = truth.map(Thresholds::of).transpose()?;
    let mut history: Vec<Vec<Variant>> = Vec::new();
    let mut hits = 0;
    let mut found = false;
    let mut rounds = Vec::new();
    for r in &state.rounds {
        let batch = r.batch();
        let (unique_loci, new_loci) = batch_loci_diversity(&batch, &history);
        let acts: Vec<f64> = r.measurements.iter().map(|m| m.activity).collect();
        let (cumulative_hits, top_percentile_found) = match (&thresholds, truth) {
            (Some(t), Some(d)) => {
                let truth_acts: Vec<f64> = batch.iter().filter_map(|v| d.activity(v)).collect();
                hits += truth_acts.iter().filter(|&&a| a >= t.top_decile).count();
                found |= truth_acts.iter().any(|&a| a >= t.top_percentile);
                (Some(hits), Some(found))
            }
            _ => (None, None),
        };
        rounds.push(RoundMetrics {
            round: r.round,
            proposed: batch.len(),
            measured: r.measurements.len(),
            failed: r.failed.len(),
            unique_loci,
            new_loci,
            best_activity: acts.iter().copied().reduce(f64::max),
            mean_activity: (!acts.is_empty()).then(|| acts.iter().sum::<f64>() / acts.len() as f64),
            cumulative_hits,
            top_percentile_found,
        });
        history.push(batch);
    }
    Ok(CampaignMetrics {
        id: state.id.clone(),
        status: state.status,
        rounds,
    })
}
