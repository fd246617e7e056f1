//! Parallel benchmark runs over replicates.

use rayon::prelude::*;

use folde_core::model::{Dataset, EmbeddingStore, LogProbMatrix};
use folde_core::sim::{self, replicate_warm_start, run_campaign, CampaignRun, Landscape, Policy, SimConfig};

use crate::error::Result;

/// Owned inputs of a benchmark.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dataset: Dataset,
    pub embeddings: EmbeddingStore,
    pub logprobs: LogProbMatrix,
}

impl From<Landscape> for Artifacts {
    fn from(l: Landscape) -> Self {
        Artifacts {
            dataset: l.dataset,
            embeddings: l.embeddings,
            logprobs: l.logprobs,
        }
    }
}

impl Artifacts {
    pub fn view(&self) -> sim::Artifacts<'_> {
        sim::Artifacts {
            dataset: &self.dataset,
            embeddings: &self.embeddings,
            logprobs: &self.logprobs,
        }
    }
}

/// Runs every policy for every replicate. Replicates run in parallel and share
/// one warm-started ensemble across their warm-starting policies; the output is
/// sorted by (policy, replicate).
pub fn simulate(artifacts: &Artifacts, config: &SimConfig, policies: &[Policy]) -> Result<Vec<CampaignRun>> {
    config.validate()?;
    let per_replicate: Vec<Vec<CampaignRun>> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<Vec<CampaignRun>> {
            let warm = if policies.iter().any(|p| p.uses_warm_start(&config.ensemble)) {
                Some(replicate_warm_start(artifacts.view(), config, rep)?)
            } else {
                None
            };
            policies
                .iter()
                .map(|&policy| {
                    let c = SimConfig {
                        policy,
                        ..config.clone()
                    };
                    Ok(run_campaign(artifacts.view(), &c, rep, warm.as_ref())?)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut runs: Vec<CampaignRun> = per_replicate.into_iter().flatten().collect();
    runs.sort_by_key(|r| (r.policy, r.replicate));
    Ok(runs)
}
