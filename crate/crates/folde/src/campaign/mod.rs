//! Live campaigns: persisted state, proposal engine, service and HTTP API.

pub mod engine;
pub mod http;
pub mod service;
pub mod state;
pub mod store;

pub use engine::{campaign_metrics, propose_round, CampaignInputs, CampaignMetrics, RoundMetrics};
pub use http::{route, CampaignServer, ServerHandle};
pub use service::{CampaignService, CampaignSummary, CreateRequest, MeasurementRequest};
pub use state::{ArtifactPaths, CampaignConfig, CampaignRound, CampaignState, Measurement, Proposal, Status, Submission};
pub use store::CampaignStore;
