//! Selection policies and simulation settings.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::pipeline::{Acquisition, EnsembleSettings};
use crate::ranker::Objective;
use crate::selector::{ClOptions, NoisePlacement, DEFAULT_BETA};

/// Noise multiplier used by the no-constant-liar ablation in every round.
pub const EXPLOIT_ALPHA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Random,
    ZeroShot,
    RandomForest,
    Folde,
    FoldeNoWarmstart,
    FoldeNoCl,
    UcbTopn,
    MseNet,
}

impl Policy {
    pub const ALL: [Policy; 8] = [
        Policy::Random,
        Policy::ZeroShot,
        Policy::RandomForest,
        Policy::Folde,
        Policy::FoldeNoWarmstart,
        Policy::FoldeNoCl,
        Policy::UcbTopn,
        Policy::MseNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Random => "random",
            Policy::ZeroShot => "zero_shot",
            Policy::RandomForest => "random_forest",
            Policy::Folde => "folde",
            Policy::FoldeNoWarmstart => "folde_no_warmstart",
            Policy::FoldeNoCl => "folde_no_cl",
            Policy::UcbTopn => "ucb_topn",
            Policy::MseNet => "mse_net",
        }
    }

    /// Policies that train a ranker ensemble after round 1.
    pub fn uses_ensemble(self) -> bool {
        matches!(
            self,
            Policy::Folde | Policy::FoldeNoWarmstart | Policy::FoldeNoCl | Policy::UcbTopn | Policy::MseNet
        )
    }

    /// Policies whose round-1 batch is chosen by naturalness.
    pub fn zero_shot_first(self) -> bool {
        self == Policy::ZeroShot || self.uses_ensemble()
    }

    pub fn ensemble_settings(self, base: &EnsembleSettings) -> EnsembleSettings {
        let mut s = base.clone();
        match self {
            Policy::FoldeNoWarmstart => s.warm_start = None,
            Policy::MseNet => {
                s.warm_start = None;
                s.objective = Objective::SquaredError;
            }
            _ => {}
        }
        s
    }

    pub fn uses_warm_start(self, base: &EnsembleSettings) -> bool {
        self.uses_ensemble() && self.ensemble_settings(base).warm_start.is_some()
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown policy `{s}`")))
    }
}

impl TryFrom<String> for Policy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub rounds: usize,
    pub batch_size: usize,
    pub replicates: usize,
    pub policy: Policy,
    /// Constant-liar noise multiplier for round 2, 3, ...; the last entry
    /// repeats for later rounds.
    pub alpha_schedule: Vec<f64>,
    pub seed: u64,
    pub holdout_fraction: f64,
    /// Best measured variants of each round used as expansion parents.
    pub parents_per_round: usize,
    pub beta: f64,
    pub noise_placement: NoisePlacement,
    pub ensemble: EnsembleSettings,
    pub forest: ForestConfig,
    /// Record the model's rank correlation on the holdout each round.
    pub holdout_spearman: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rounds: 3,
            batch_size: 16,
            replicates: 20,
            policy: Policy::Folde,
            alpha_schedule: alloc::vec![6.0, 100.0],
            seed: 0,
            holdout_fraction: 0.5,
            parents_per_round: 4,
            beta: DEFAULT_BETA,
            noise_placement: NoisePlacement::PerStep,
            ensemble: EnsembleSettings::default(),
            forest: ForestConfig::default(),
            holdout_spearman: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.rounds == 0 || self.batch_size == 0 || self.replicates == 0 {
            return bad("rounds, batch_size and replicates must be at least 1");
        }
        if self.alpha_schedule.is_empty() || self.alpha_schedule.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("alpha_schedule needs at least one finite value >= 0");
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout_fraction must lie in [0, 1)");
        }
        if self.ensemble.members < 2 {
            return bad("the ensemble needs at least 2 members");
        }
        self.ensemble.activity.validate()?;
        if let Some(w) = &self.ensemble.warm_start {
            w.validate()?;
        }
        Ok(())
    }

    /// Noise multiplier for `round` (2-based schedule).
    pub fn alpha(&self, round: usize) -> f64 {
        let k = round.saturating_sub(2).min(self.alpha_schedule.len() - 1);
        self.alpha_schedule[k]
    }

    /// Acquisition rule of model-based policies in `round`.
    pub fn acquisition(&self, policy: Policy, round: usize) -> Acquisition {
        let cl = |alpha| {
            Acquisition::ConstantLiar(ClOptions {
                alpha,
                beta: self.beta,
                placement: self.noise_placement,
            })
        };
        match policy {
            Policy::FoldeNoCl => cl(EXPLOIT_ALPHA),
            Policy::UcbTopn => Acquisition::TopUcb { beta: self.beta },
            Policy::MseNet => Acquisition::TopMean,
            _ => cl(self.alpha(round)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("greedy".parse::<Policy>().is_err());
    }

    #[test]
    fn alpha_schedule_repeats_last() {
        let c = SimConfig::default();
        assert_eq!(c.alpha(2), 6.0);
        assert_eq!(c.alpha(3), 100.0);
        assert_eq!(c.alpha(7), 100.0);
    }

    #[test]
    fn ablations_change_settings() {
        let base = EnsembleSettings::default();
        assert!(Policy::Folde.uses_warm_start(&base));
        assert!(!Policy::FoldeNoWarmstart.uses_warm_start(&base));
        assert_eq!(Policy::MseNet.ensemble_settings(&base).objective, Objective::SquaredError);
        assert!(!Policy::Random.uses_ensemble());
    }
}
