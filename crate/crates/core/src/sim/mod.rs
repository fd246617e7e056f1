//! Benchmark harness: synthetic landscapes, holdout oracle, selection policies
//! and campaign metrics.

pub mod landscape;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod runner;

pub use landscape::{synth_landscape, Landscape, LandscapeConfig, LandscapeMeta};
pub use metrics::{batch_loci_diversity, top_decile_hits, top_percentile_success, MetricsReport, RoundSummary};
pub use oracle::{LandscapeOracle, Thresholds};
pub use policy::{Policy, SimConfig, EXPLOIT_ALPHA};
pub use runner::{
    ensemble_seed, expand_candidates, expansion_parents, replicate_seed, replicate_warm_start, run_campaign, Artifacts,
    CampaignRun, RoundRecord,
};
pub use crate::stats::{difficulty, spearman, wilcoxon_one_sided};
