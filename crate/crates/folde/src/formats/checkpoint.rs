//! `FLDM1` ensemble checkpoints, little-endian:
//!
//! ```text
//! "FLDM1" | header_len: u32 | header: json | per member: params, then running mean and var per hidden layer (f32)
//! ```
//!
//! The json header carries the ensemble and member configurations.

use std::path::Path;

use folde_core::ranker::{Ensemble, MlpConfig, MlpModel, RunningStats};
use serde::{Deserialize, Serialize};

use crate::error::{io_at, Error, Result};

pub const MAGIC: &[u8; 5] = b"FLDM1";

#[derive(Serialize, Deserialize)]
struct Header {
    ensemble: MlpConfig,
    members: Vec<MlpConfig>,
}

fn push_f32s(out: &mut Vec<u8>, xs: &[f32]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_checkpoint(ensemble: &Ensemble<f32>) -> Result<Vec<u8>> {
    let header = Header {
        ensemble: ensemble.config().clone(),
        members: ensemble.members().iter().map(|m| m.config().clone()).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for m in ensemble.members() {
        push_f32s(&mut out, m.params());
        for s in m.running_stats() {
            push_f32s(&mut out, &s.mean);
            push_f32s(&mut out, &s.var);
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Ensemble<f32>> {
    let truncated = || Error::Format("truncated checkpoint".into());
    if bytes.get(..5) != Some(&MAGIC[..]) {
        return Err(Error::Format("not an FLDM1 checkpoint".into()));
    }
    let len = u32::from_le_bytes(bytes.get(5..9).ok_or_else(truncated)?.try_into().expect("4 bytes")) as usize;
    let header: Header = serde_json::from_slice(bytes.get(9..9 + len).ok_or_else(truncated)?)?;
    let mut at = 9 + len;
    let mut floats = |n: usize| -> Result<Vec<f32>> {
        let raw = bytes.get(at..at + 4 * n).ok_or_else(truncated)?;
        at += 4 * n;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    };
    let mut members = Vec::with_capacity(header.members.len());
    for config in header.members {
        let params = floats(config.param_count())?;
        let running = config
            .hidden_dims
            .iter()
            .map(|&d| Ok(RunningStats { mean: floats(d)?, var: floats(d)? }))
            .collect::<Result<Vec<_>>>()?;
        members.push(MlpModel::from_parts(config, params, running)?);
    }
    if at != bytes.len() {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    Ok(Ensemble::from_members(header.ensemble, members)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Ensemble<f32>> {
    let path = path.as_ref();
    decode_checkpoint(&std::fs::read(path).map_err(io_at(path))?)
}

pub fn save_checkpoint(path: impl AsRef<Path>, ensemble: &Ensemble<f32>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(ensemble)?).map_err(io_at(path))
}
