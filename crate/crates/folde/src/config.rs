//! TOML run configuration.
//!
//! ```toml
//! policies = ["folde", "random"]   # ablate only; simulate uses simulation.policy
//!
//! [simulation]                     # SimConfig; every field optional
//! replicates = 20
//! seed = 7
//!
//! [landscape]                      # used when [data] is absent
//! n_variants = 570
//!
//! [data]                           # relative paths resolve against the data dir
//! dataset = "target.tsv"
//! embeddings = "target.flde"
//! logprobs = "target.lp.tsv"
//! ```

use std::path::{Path, PathBuf};

use folde_core::sim::{synth_landscape, LandscapeConfig, Policy, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_at, Error, Result};
use crate::formats::{load_dataset, load_embeddings, load_logprobs};
use crate::simulate::Artifacts;

/// Environment variable that overrides the data directory.
pub const DATA_DIR_ENV: &str = "FOLDE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    pub dataset: PathBuf,
    pub embeddings: PathBuf,
    pub logprobs: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub simulation: SimConfig,
    pub landscape: LandscapeConfig,
    pub data: Option<DataPaths>,
    pub policies: Vec<Policy>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.simulation.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        RunConfig::parse(&std::fs::read_to_string(path).map_err(io_at(path))?)
    }

    /// Policies for an ablation sweep; every policy when none are listed.
    pub fn sweep(&self) -> Vec<Policy> {
        if self.policies.is_empty() {
            Policy::ALL.to_vec()
        } else {
            self.policies.clone()
        }
    }

    /// Loads the configured files, or synthesizes the landscape.
    pub fn artifacts(&self, data_dir: Option<&Path>) -> Result<Artifacts> {
        match &self.data {
            Some(paths) => {
                let at = |p: &Path| match data_dir {
                    Some(d) if p.is_relative() => d.join(p),
                    _ => p.to_path_buf(),
                };
                let dataset = load_dataset(at(&paths.dataset))?;
                let embeddings = load_embeddings(at(&paths.embeddings))?;
                let logprobs = load_logprobs(at(&paths.logprobs))?;
                logprobs.check_length(dataset.reference())?;
                Ok(Artifacts {
                    dataset,
                    embeddings,
                    logprobs,
                })
            }
            None => Ok(synth_landscape(&self.landscape)?.into()),
        }
    }
}

/// `explicit`, else the environment override, else `fallback`.
pub fn data_dir(explicit: Option<PathBuf>, fallback: Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)).or(fallback)
}
