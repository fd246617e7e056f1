//! One directory per campaign under a root: `state.json`, a lock file, and a
//! cached warm-start checkpoint.

use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::state::{valid_id, CampaignState};
use crate::error::{io_at, Error, Result};

pub const STATE_FILE: &str = "state.json";
pub const LOCK_FILE: &str = "lock";
pub const WARM_FILE: &str = "warm.fldm";

#[derive(Debug, Clone)]
pub struct CampaignStore {
    root: PathBuf,
}

/// Exclusive writer lock on one campaign, released on drop.
pub struct CampaignLock {
    file: File,
}

impl Drop for CampaignLock {
    fn drop(&mut self) {
        let _ = self.file.unlock();
    }
}

/// Writes `bytes` to a sibling temp file, syncs it and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(io_at(&tmp))?;
    f.write_all(bytes).map_err(io_at(&tmp))?;
    f.sync_all().map_err(io_at(&tmp))?;
    fs::rename(&tmp, path).map_err(io_at(path))
}

impl CampaignStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_at(&root))?;
        Ok(CampaignStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, id: &str) -> Result<PathBuf> {
        valid_id(id)?;
        Ok(self.root.join(id))
    }

    /// Resolves an artifact path stored in a campaign.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_relative() {
            self.root.join(path)
        } else {
            path.to_path_buf()
        }
    }

    pub fn exists(&self, id: &str) -> bool {
        self.dir(id).map(|d| d.join(STATE_FILE).is_file()).unwrap_or(false)
    }

    pub fn lock(&self, id: &str) -> Result<CampaignLock> {
        let dir = self.dir(id)?;
        if !dir.join(STATE_FILE).is_file() {
            return Err(Error::NotFound(id.into()));
        }
        let path = dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io_at(&path))?;
        file.lock().map_err(io_at(&path))?;
        Ok(CampaignLock { file })
    }

    pub fn load(&self, id: &str) -> Result<CampaignState> {
        let path = self.dir(id)?.join(STATE_FILE);
        let text = match fs::read(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::NotFound(id.into())),
            Err(e) => return Err(io_at(&path)(e)),
        };
        Ok(serde_json::from_slice(&text)?)
    }

    pub fn save(&self, state: &CampaignState) -> Result<()> {
        let dir = self.dir(&state.id)?;
        fs::create_dir_all(&dir).map_err(io_at(&dir))?;
        let mut json = serde_json::to_vec_pretty(state)?;
        json.push(b'\n');
        write_atomic(&dir.join(STATE_FILE), &json)
    }

    /// Saves a new campaign; fails if the id is taken.
    pub fn create(&self, state: &CampaignState) -> Result<()> {
        let dir = self.dir(&state.id)?;
        match fs::create_dir(&dir) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && !dir.join(STATE_FILE).exists() => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(Error::Conflict(format!("campaign `{}` already exists", state.id)))
            }
            Err(e) => return Err(io_at(&dir)(e)),
        }
        self.save(state)
    }

    /// First free id of the form `campaign-N`.
    pub fn next_id(&self) -> String {
        (1..).map(|n| format!("campaign-{n}")).find(|id| !self.exists(id)).expect("unbounded")
    }

    /// Ids of every stored campaign, sorted.
    pub fn list(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_at(&self.root))? {
            let entry = entry.map_err(io_at(&self.root))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if valid_id(&name).is_ok() && entry.path().join(STATE_FILE).is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn warm_path(&self, id: &str) -> Result<PathBuf> {
        Ok(self.dir(id)?.join(WARM_FILE))
    }
}
