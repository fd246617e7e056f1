//! Campaign operations over a store: create, propose, record, metrics.

use std::path::PathBuf;

use folde_core::variant::Sequence;
use serde::{Deserialize, Serialize};

use super::engine::{campaign_metrics, propose_round, CampaignInputs, CampaignMetrics};
use super::state::{ArtifactPaths, CampaignConfig, CampaignState, Status, Submission};
use super::store::CampaignStore;
use crate::error::{Error, Result};
use crate::formats::{load_checkpoint, load_dataset, load_embeddings, load_logprobs, save_checkpoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateRequest {
    #[serde(default)]
    pub id: Option<String>,
    pub reference: String,
    pub embeddings: PathBuf,
    pub logprobs: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
    #[serde(default)]
    pub config: CampaignConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRequest {
    pub measurements: Vec<Submission>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub id: String,
    pub status: Status,
    pub rounds: usize,
    pub reference_length: usize,
}

#[derive(Debug, Clone)]
pub struct CampaignService {
    store: CampaignStore,
}

impl CampaignService {
    pub fn new(store: CampaignStore) -> Self {
        CampaignService { store }
    }

    pub fn store(&self) -> &CampaignStore {
        &self.store
    }

    pub fn inputs(&self, state: &CampaignState) -> Result<CampaignInputs> {
        let a = &state.artifacts;
        let embeddings = load_embeddings(self.store.resolve(&a.embeddings))?;
        let logprobs = load_logprobs(self.store.resolve(&a.logprobs))?;
        logprobs.check_length(&state.reference)?;
        let truth = a.truth.as_ref().map(|t| load_dataset(self.store.resolve(t))).transpose()?;
        if let Some(d) = &truth {
            if d.reference() != &state.reference {
                return Err(Error::Invalid("ground-truth dataset has a different reference".into()));
            }
        }
        Ok(CampaignInputs {
            embeddings,
            logprobs,
            truth,
        })
    }

    /// Validates the artifacts and persists a fresh campaign.
    pub fn create(&self, req: CreateRequest) -> Result<CampaignState> {
        let reference: Sequence = req.reference.trim().parse()?;
        let id = match req.id {
            Some(id) => id,
            None => self.store.next_id(),
        };
        let state = CampaignState::new(
            id,
            reference,
            ArtifactPaths {
                embeddings: req.embeddings,
                logprobs: req.logprobs,
                truth: req.truth,
            },
            req.config,
        )?;
        let inputs = self.inputs(&state)?;
        if let Some((v, _)) = inputs.embeddings.rows().iter().find(|(v, _)| v.check_reference(&state.reference).is_err()) {
            return Err(Error::Invalid(format!("embedding for {v} does not match the reference")));
        }
        self.store.create(&state)?;
        Ok(state)
    }

    pub fn get(&self, id: &str) -> Result<CampaignState> {
        self.store.load(id)
    }

    pub fn list(&self) -> Result<Vec<CampaignSummary>> {
        self.store
            .list()?
            .into_iter()
            .map(|id| {
                let s = self.store.load(&id)?;
                Ok(CampaignSummary {
                    id: s.id,
                    status: s.status,
                    rounds: s.rounds.len(),
                    reference_length: s.reference.len(),
                })
            })
            .collect()
    }

    /// Computes the next batch and persists it before returning it.
    pub fn propose(&self, id: &str) -> Result<CampaignState> {
        let _lock = self.store.lock(id)?;
        let mut state = self.store.load(id)?;
        state.can_propose()?;
        let inputs = self.inputs(&state)?;
        let warm_path = self.store.warm_path(id)?;
        let cached = if state.next_round() > 1 && warm_path.is_file() {
            load_checkpoint(&warm_path).ok()
        } else {
            None
        };
        let had_cache = cached.is_some();
        let (round, warm) = propose_round(&state, &inputs, cached)?;
        if let (Some(w), false) = (&warm, had_cache) {
            save_checkpoint(&warm_path, w)?;
        }
        state.push_round(round)?;
        self.store.save(&state)?;
        Ok(state)
    }

    pub fn record(&self, id: &str, entries: &[Submission]) -> Result<CampaignState> {
        let _lock = self.store.lock(id)?;
        let mut state = self.store.load(id)?;
        state.record(entries)?;
        self.store.save(&state)?;
        Ok(state)
    }

    pub fn metrics(&self, id: &str) -> Result<CampaignMetrics> {
        let state = self.store.load(id)?;
        let truth = state
            .artifacts
            .truth
            .as_ref()
            .map(|t| load_dataset(self.store.resolve(t)))
            .transpose()?;
        campaign_metrics(&state, truth.as_ref())
    }
}
