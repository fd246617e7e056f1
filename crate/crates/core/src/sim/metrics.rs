//! Campaign metrics: top-decile hits, top-percentile success, loci diversity.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::oracle::Thresholds;
use super::runner::CampaignRun;
use super::Policy;
use crate::model::Dataset;
use crate::stats::{mean, std_error};
use crate::variant::Variant;

fn activities_of<'a>(selected: &'a [Variant], dataset: &'a Dataset) -> impl Iterator<Item = f64> + 'a {
    selected.iter().filter_map(|v| dataset.activity(v))
}

/// Selected variants at or above the dataset's 90th activity percentile.
pub fn top_decile_hits(selected: &[Variant], dataset: &Dataset) -> usize {
    match Thresholds::of(dataset) {
        Ok(t) => activities_of(selected, dataset).filter(|&a| a >= t.top_decile).count(),
        Err(_) => 0,
    }
}

/// Whether any selected variant reaches the 99th activity percentile.
pub fn top_percentile_success(selected: &[Variant], dataset: &Dataset) -> bool {
    match Thresholds::of(dataset) {
        Ok(t) => activities_of(selected, dataset).any(|a| a >= t.top_percentile),
        Err(_) => false,
    }
}

/// `(unique, new)`: distinct mutated positions in `batch`, and how many of
/// those were never mutated in `history`.
pub fn batch_loci_diversity(batch: &[Variant], history: &[Vec<Variant>]) -> (usize, usize) {
    let loci: BTreeSet<usize> = batch.iter().flat_map(|v| v.positions()).collect();
    let seen: BTreeSet<usize> = history.iter().flatten().flat_map(|v| v.positions()).collect();
    let new = loci.iter().filter(|p| !seen.contains(p)).count();
    (loci.len(), new)
}

/// Per-round aggregate over the replicates of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub mean_cumulative_hits: f64,
    pub se_cumulative_hits: f64,
    pub top_percentile_probability: f64,
    pub mean_unique_loci: f64,
    pub mean_new_loci: f64,
    pub mean_holdout_spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: Policy,
    pub replicates: usize,
    pub rounds: Vec<RoundSummary>,
}

impl MetricsReport {
    /// Aggregates runs of one policy. Runs of other policies are ignored.
    pub fn from_runs(policy: Policy, runs: &[CampaignRun]) -> Self {
        let runs: Vec<&CampaignRun> = runs.iter().filter(|r| r.policy == policy).collect();
        let n_rounds = runs.iter().map(|r| r.rounds.len()).max().unwrap_or(0);
        let rounds = (0..n_rounds)
            .map(|k| {
                let at: Vec<_> = runs.iter().filter_map(|r| r.rounds.get(k)).collect();
                let hits: Vec<f64> = at.iter().map(|x| x.cumulative_hits as f64).collect();
                let success = at.iter().filter(|x| x.top_percentile_found).count() as f64;
                let spearman: Vec<f64> = at.iter().filter_map(|x| x.holdout_spearman).collect();
                RoundSummary {
                    round: k + 1,
                    mean_cumulative_hits: mean(&hits).unwrap_or(0.0),
                    se_cumulative_hits: std_error(&hits).unwrap_or(0.0),
                    top_percentile_probability: if at.is_empty() { 0.0 } else { success / at.len() as f64 },
                    mean_unique_loci: mean(&at.iter().map(|x| x.unique_loci as f64).collect::<Vec<_>>()).unwrap_or(0.0),
                    mean_new_loci: mean(&at.iter().map(|x| x.new_loci as f64).collect::<Vec<_>>()).unwrap_or(0.0),
                    mean_holdout_spearman: mean(&spearman),
                }
            })
            .collect();
        MetricsReport {
            policy,
            replicates: runs.len(),
            rounds,
        }
    }
}
