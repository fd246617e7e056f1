//! Round-by-round campaign simulation against a landscape oracle.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::oracle::LandscapeOracle;
use super::policy::{Policy, SimConfig};
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::model::{Dataset, EmbeddingStore, LogProbMatrix};
use crate::naturalness::zero_shot_select;
use crate::pipeline::{acquire, fit_activity, score_candidates, warm_start_ensemble, Acquisition};
use crate::ranker::ensemble::consensus_of;
use crate::ranker::Ensemble;
use crate::rng::{self, tag};
use crate::selector::top_n_select;
use crate::stats::spearman;
use crate::variant::Variant;

use super::metrics::batch_loci_diversity;

/// Index mixed into a replicate seed for everything ensemble related.
const ENSEMBLE_STREAM: u64 = 0xE5;
const FOREST_STREAM: u64 = 0xF0;

/// Inputs a campaign reads: ground truth, embeddings and log-probabilities.
#[derive(Debug, Clone, Copy)]
pub struct Artifacts<'a> {
    pub dataset: &'a Dataset,
    pub embeddings: &'a EmbeddingStore,
    pub logprobs: &'a LogProbMatrix,
}

impl<'a> From<&'a super::Landscape> for Artifacts<'a> {
    fn from(l: &'a super::Landscape) -> Self {
        Artifacts {
            dataset: &l.dataset,
            embeddings: &l.embeddings,
            logprobs: &l.logprobs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub batch: Vec<Variant>,
    pub activities: Vec<f64>,
    pub alpha: Option<f64>,
    /// Rank correlation of the round's model with the holdout activities.
    pub holdout_spearman: Option<f64>,
    pub unique_loci: usize,
    pub new_loci: usize,
    pub batch_hits: usize,
    pub cumulative_hits: usize,
    pub top_percentile_found: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRun {
    pub policy: Policy,
    pub replicate: usize,
    pub rounds: Vec<RoundRecord>,
}

impl CampaignRun {
    pub fn measured(&self) -> impl Iterator<Item = &Variant> {
        self.rounds.iter().flat_map(|r| r.batch.iter())
    }
}

pub fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    rng::derive(seed, replicate as u64)
}

pub fn ensemble_seed(seed: u64, replicate: usize) -> u64 {
    rng::derive(replicate_seed(seed, replicate), ENSEMBLE_STREAM)
}

/// Wild type followed by the `per_round` best variants of every round.
pub fn expansion_parents(rounds: &[Vec<(Variant, f64)>], per_round: usize) -> Vec<Variant> {
    let mut parents = alloc::vec![Variant::wild_type()];
    for round in rounds {
        let scores: Vec<f64> = round.iter().map(|(_, a)| *a).collect();
        for k in top_n_select(&scores, per_round.min(round.len())) {
            if !parents.contains(&round[k].0) {
                parents.push(round[k].0.clone());
            }
        }
    }
    parents
}

/// Pool members one mutation away from any parent, minus `excluded`, in pool order.
pub fn expand_candidates(parents: &[Variant], pool: &[Variant], excluded: &BTreeSet<Variant>) -> Result<Vec<Variant>> {
    let mut seen = BTreeSet::new();
    let out: Vec<Variant> = pool
        .iter()
        .filter(|v| !excluded.contains(*v) && parents.iter().any(|p| p.hamming(v) == 1))
        .filter(|v| seen.insert((*v).clone()))
        .cloned()
        .collect();
    if out.is_empty() {
        return Err(Error::PoolExhausted);
    }
    Ok(out)
}

/// Warm-started ensemble shared by every warm-starting policy of a replicate.
pub fn replicate_warm_start(artifacts: Artifacts<'_>, config: &SimConfig, replicate: usize) -> Result<Ensemble<f32>> {
    warm_start_ensemble(
        artifacts.dataset.reference(),
        artifacts.logprobs,
        artifacts.embeddings,
        &config.ensemble,
        ensemble_seed(config.seed, replicate),
    )
}

struct Choice {
    batch: Vec<Variant>,
    alpha: Option<f64>,
    holdout_spearman: Option<f64>,
}

fn holdout_correlation(oracle: &LandscapeOracle<'_>, predict: impl FnOnce(&[Variant]) -> Result<Vec<f64>>) -> Result<Option<f64>> {
    if oracle.holdout().len() < 2 {
        return Ok(None);
    }
    let records = oracle.dataset().records();
    let variants: Vec<Variant> = oracle.holdout().iter().map(|&k| records[k].variant.clone()).collect();
    let truth: Vec<f64> = oracle.holdout().iter().map(|&k| records[k].activity).collect();
    let predicted = predict(&variants)?;
    Ok(spearman(&predicted, &truth).ok())
}

/// Runs `config.policy` for one replicate. `warm` may supply the replicate's
/// warm-started ensemble; otherwise it is trained when first needed.
pub fn run_campaign(
    artifacts: Artifacts<'_>,
    config: &SimConfig,
    replicate: usize,
    warm: Option<&Ensemble<f32>>,
) -> Result<CampaignRun> {
    config.validate()?;
    let policy = config.policy;
    let settings = policy.ensemble_settings(&config.ensemble);
    let rep_seed = replicate_seed(config.seed, replicate);
    let ens_seed = ensemble_seed(config.seed, replicate);
    let oracle = LandscapeOracle::new(artifacts.dataset, config.holdout_fraction, rep_seed)?;
    let thresholds = oracle.thresholds();
    let visible = oracle.visible_variants();
    if visible.len() < config.rounds * config.batch_size {
        return Err(Error::InvalidParameter(alloc::format!(
            "visible pool of {} cannot supply {} rounds of {}",
            visible.len(),
            config.rounds,
            config.batch_size
        )));
    }
    let mut policy_rng = rng::stream(rep_seed, tag::POLICY);
    let mut cached: Option<Ensemble<f32>> = warm.cloned();

    let mut measured: Vec<Vec<(Variant, f64)>> = Vec::new();
    let mut measured_set: BTreeSet<Variant> = BTreeSet::new();
    let mut history: Vec<Vec<Variant>> = Vec::new();
    let mut records = Vec::with_capacity(config.rounds);
    let mut cumulative_hits = 0;
    let mut found = false;

    for round in 1..=config.rounds {
        let pool: Vec<Variant> = visible.iter().filter(|v| !measured_set.contains(*v)).cloned().collect();
        if pool.is_empty() {
            return Err(Error::PoolExhausted);
        }
        let n = config.batch_size.min(pool.len());

        let choice = if round == 1 || !(policy.uses_ensemble() || policy == Policy::RandomForest) {
            let batch = match policy {
                Policy::Random | Policy::RandomForest => index::sample(&mut policy_rng, pool.len(), n)
                    .into_iter()
                    .map(|k| pool[k].clone())
                    .collect(),
                Policy::ZeroShot => zero_shot_select(&pool, artifacts.logprobs, n, None)?,
                _ => {
                    let singles: Vec<Variant> = pool.iter().filter(|v| v.len() == 1).cloned().collect();
                    let from = if singles.len() >= n { &singles } else { &pool };
                    zero_shot_select(from, artifacts.logprobs, n, None)?
                }
            };
            Choice {
                batch,
                alpha: None,
                holdout_spearman: None,
            }
        } else {
            let parents = expansion_parents(&measured, config.parents_per_round);
            let candidates = match expand_candidates(&parents, &pool, &measured_set) {
                Ok(c) if c.len() >= n => c,
                _ => pool.clone(),
            };
            let labelled: Vec<(Variant, f64)> = measured.iter().flatten().cloned().collect();
            if policy == Policy::RandomForest {
                let dim = artifacts.embeddings.dim();
                let as_f64 = |vs: &[Variant]| -> Result<Vec<f64>> {
                    Ok(artifacts.embeddings.gather(vs)?.into_iter().map(f64::from).collect())
                };
                let (vs, labels): (Vec<Variant>, Vec<f64>) = labelled.into_iter().unzip();
                let mut forest_config = config.forest.clone();
                forest_config.seed = rng::derive(rng::derive(rep_seed, FOREST_STREAM), round as u64);
                let forest = Forest::fit(&as_f64(&vs)?, &labels, dim, &forest_config)?;
                let scores = forest.predict(&as_f64(&candidates)?)?;
                let holdout_spearman = if config.holdout_spearman {
                    holdout_correlation(&oracle, |hv| forest.predict(&as_f64(hv)?))?
                } else {
                    None
                };
                Choice {
                    batch: top_n_select(&scores, n).into_iter().map(|k| candidates[k].clone()).collect(),
                    alpha: None,
                    holdout_spearman,
                }
            } else {
                let mut ensemble = match (&cached, settings.warm_start.is_some()) {
                    (Some(e), true) => e.clone(),
                    _ => {
                        let e = warm_start_ensemble(
                            artifacts.dataset.reference(),
                            artifacts.logprobs,
                            artifacts.embeddings,
                            &settings,
                            ens_seed,
                        )?;
                        if settings.warm_start.is_some() {
                            cached = Some(e.clone());
                        }
                        e
                    }
                };
                fit_activity(
                    &mut ensemble,
                    artifacts.embeddings,
                    &labelled,
                    &settings,
                    rng::derive(ens_seed, round as u64),
                )?;
                let scored = score_candidates(&ensemble, artifacts.embeddings, &candidates)?;
                let acquisition = config.acquisition(policy, round);
                let picks = acquire(&scored, n, &acquisition)?;
                let holdout_spearman = if config.holdout_spearman {
                    holdout_correlation(&oracle, |hv| {
                        consensus_of(&ensemble.member_predictions(&artifacts.embeddings.gather(hv)?)?)
                    })?
                } else {
                    None
                };
                Choice {
                    batch: picks.into_iter().map(|k| candidates[k].clone()).collect(),
                    alpha: match acquisition {
                        Acquisition::ConstantLiar(o) => Some(o.alpha),
                        _ => None,
                    },
                    holdout_spearman,
                }
            }
        };

        let activities = choice
            .batch
            .iter()
            .map(|v| oracle.measure(v))
            .collect::<Result<Vec<f64>>>()?;
        let (unique_loci, new_loci) = batch_loci_diversity(&choice.batch, &history);
        let batch_hits = activities.iter().filter(|&&a| a >= thresholds.top_decile).count();
        cumulative_hits += batch_hits;
        found |= activities.iter().any(|&a| a >= thresholds.top_percentile);
        for v in &choice.batch {
            if !measured_set.insert(v.clone()) {
                return Err(Error::DuplicateVariant(v.to_string()));
            }
        }
        measured.push(choice.batch.iter().cloned().zip(activities.iter().copied()).collect());
        history.push(choice.batch.clone());
        records.push(RoundRecord {
            round,
            batch: choice.batch,
            activities,
            alpha: choice.alpha,
            holdout_spearman: choice.holdout_spearman,
            unique_loci,
            new_loci,
            batch_hits,
            cumulative_hits,
            top_percentile_found: found,
        });
    }
    Ok(CampaignRun {
        policy,
        replicate,
        rounds: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variant::Sequence;

    #[test]
    fn parents_are_wild_type_plus_best() {
        let reference: Sequence = "ACDE".parse().unwrap();
        let s = crate::variant::all_singles(&reference);
        let rounds = alloc::vec![alloc::vec![(s[0].clone(), 1.0), (s[1].clone(), 3.0), (s[2].clone(), 2.0)]];
        let p = expansion_parents(&rounds, 2);
        assert_eq!(p, alloc::vec![Variant::wild_type(), s[1].clone(), s[2].clone()]);
    }

    #[test]
    fn expansion_follows_parents() {
        let reference: Sequence = "ACDE".parse().unwrap();
        let a1 = Variant::parse("A1C", &reference).unwrap();
        let c2 = Variant::parse("C2D", &reference).unwrap();
        let double = Variant::parse("A1C:C2D", &reference).unwrap();
        let far = Variant::parse("D3E:E4F", &reference).unwrap();
        let pool = alloc::vec![a1.clone(), c2.clone(), double.clone(), far.clone()];
        let measured: BTreeSet<Variant> = [a1.clone()].into_iter().collect();
        let c = expand_candidates(&[Variant::wild_type(), a1.clone()], &pool, &measured).unwrap();
        assert_eq!(c, alloc::vec![c2.clone(), double.clone()]);
        let none: BTreeSet<Variant> = pool.iter().cloned().collect();
        assert_eq!(expand_candidates(&[Variant::wild_type()], &pool, &none), Err(Error::PoolExhausted));
    }
}
