//! Persisted state of a live campaign and its round state machine.

use std::collections::BTreeSet;
use std::path::PathBuf;

use folde_core::pipeline::EnsembleSettings;
use folde_core::selector::{NoisePlacement, DEFAULT_BETA};
use folde_core::variant::{Sequence, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingMeasurements,
    ReadyToPropose,
    Complete,
}

/// Files a campaign reads. Relative paths resolve against the store root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub embeddings: PathBuf,
    pub logprobs: PathBuf,
    /// Optional ground-truth dataset, used only for hit metrics in replays.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub batch_size: usize,
    pub alpha_schedule: Vec<f64>,
    /// Most picks sharing a position in a zero-shot round.
    pub per_locus_cap: Option<usize>,
    /// Status becomes `complete` after this many measured rounds.
    pub max_rounds: Option<usize>,
    pub parents_per_round: usize,
    pub beta: f64,
    pub noise_placement: NoisePlacement,
    pub seed: u64,
    pub ensemble: EnsembleSettings,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            batch_size: 16,
            alpha_schedule: vec![6.0, 100.0],
            per_locus_cap: Some(3),
            max_rounds: None,
            parents_per_round: 4,
            beta: DEFAULT_BETA,
            noise_placement: NoisePlacement::PerStep,
            seed: 0,
            ensemble: EnsembleSettings::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be at least 1".into()));
        }
        if self.alpha_schedule.is_empty() || self.alpha_schedule.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Invalid("alpha_schedule needs finite values >= 0".into()));
        }
        if self.per_locus_cap == Some(0) || self.max_rounds == Some(0) {
            return Err(Error::Invalid("per_locus_cap and max_rounds must be positive when set".into()));
        }
        if self.ensemble.members < 2 {
            return Err(Error::Invalid("the ensemble needs at least 2 members".into()));
        }
        Ok(())
    }

    /// Noise multiplier of `round` (round 2 takes the first entry).
    pub fn alpha(&self, round: usize) -> f64 {
        let k = round.saturating_sub(2).min(self.alpha_schedule.len() - 1);
        self.alpha_schedule[k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub variant: Variant,
    pub naturalness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub variant: Variant,
    pub activity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRound {
    pub round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub proposals: Vec<Proposal>,
    #[serde(default)]
    pub measurements: Vec<Measurement>,
    /// Proposed variants without a measurement; never proposed again.
    #[serde(default)]
    pub failed: Vec<Variant>,
}

impl CampaignRound {
    pub fn batch(&self) -> Vec<Variant> {
        self.proposals.iter().map(|p| p.variant.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignState {
    pub id: String,
    pub reference: Sequence,
    pub artifacts: ArtifactPaths,
    pub config: CampaignConfig,
    pub rounds: Vec<CampaignRound>,
    pub status: Status,
}

/// One entry of a measurement submission; `activity: null` marks a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub variant: String,
    pub activity: Option<f64>,
}

impl CampaignState {
    pub fn new(id: String, reference: Sequence, artifacts: ArtifactPaths, config: CampaignConfig) -> Result<Self> {
        config.validate()?;
        valid_id(&id)?;
        Ok(CampaignState {
            id,
            reference,
            artifacts,
            config,
            rounds: Vec::new(),
            status: Status::ReadyToPropose,
        })
    }

    /// Round number the next proposal gets.
    pub fn next_round(&self) -> usize {
        self.rounds.len() + 1
    }

    /// Every variant ever proposed, measured or not.
    pub fn proposed(&self) -> BTreeSet<Variant> {
        self.rounds.iter().flat_map(|r| r.proposals.iter().map(|p| p.variant.clone())).collect()
    }

    /// Measured `(variant, activity)` pairs grouped by round.
    pub fn measured_by_round(&self) -> Vec<Vec<(Variant, f64)>> {
        self.rounds
            .iter()
            .map(|r| r.measurements.iter().map(|m| (m.variant.clone(), m.activity)).collect())
            .collect()
    }

    pub fn can_propose(&self) -> Result<()> {
        match self.status {
            Status::ReadyToPropose => Ok(()),
            Status::AwaitingMeasurements => Err(Error::Conflict(format!(
                "campaign `{}` is awaiting measurements for round {}",
                self.id,
                self.rounds.len()
            ))),
            Status::Complete => Err(Error::Conflict(format!("campaign `{}` is complete", self.id))),
        }
    }

    /// Appends a proposed round and waits for its measurements.
    pub fn push_round(&mut self, round: CampaignRound) -> Result<()> {
        self.can_propose()?;
        if round.round != self.next_round() {
            return Err(Error::Invalid(format!("expected round {}, got {}", self.next_round(), round.round)));
        }
        let before = self.proposed();
        if let Some(v) = round.proposals.iter().find(|p| before.contains(&p.variant)) {
            return Err(Error::Invalid(format!("variant {} was already proposed", v.variant)));
        }
        self.rounds.push(round);
        self.status = Status::AwaitingMeasurements;
        Ok(())
    }

    /// Stores the results of the open round. Variants of the batch missing
    /// from `entries`, or given a null activity, are marked failed.
    pub fn record(&mut self, entries: &[Submission]) -> Result<()> {
        if self.status != Status::AwaitingMeasurements {
            return Err(Error::Conflict(format!("campaign `{}` has no open batch", self.id)));
        }
        let round = self.rounds.last_mut().expect("awaiting implies a round");
        let batch: BTreeSet<Variant> = round.batch().into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut measurements = Vec::new();
        for e in entries {
            let v = Variant::parse(e.variant.trim(), &self.reference)?;
            if !batch.contains(&v) {
                return Err(Error::Invalid(format!("variant {v} is not in the round {} batch", round.round)));
            }
            if !seen.insert(v.clone()) {
                return Err(Error::Invalid(format!("variant {v} submitted twice")));
            }
            match e.activity {
                Some(a) if !a.is_finite() => return Err(Error::Invalid(format!("activity of {v} is not finite"))),
                Some(activity) => measurements.push(Measurement { variant: v, activity }),
                None => {}
            }
        }
        let measured: BTreeSet<&Variant> = measurements.iter().map(|m| &m.variant).collect();
        round.failed = round.batch().into_iter().filter(|v| !measured.contains(v)).collect();
        round.measurements = measurements;
        self.status = match self.config.max_rounds {
            Some(max) if self.rounds.len() >= max => Status::Complete,
            _ => Status::ReadyToPropose,
        };
        Ok(())
    }
}

pub fn valid_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        && !id.starts_with('-');
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid(format!("campaign id `{id}` must be 1-64 of [A-Za-z0-9_-]")))
    }
}
