//! `FLDE1` embedding files. Little-endian throughout:
//!
//! ```text
//! "FLDE1" | count: u32 | dim: u32 | count x (id_len: u16 | id: utf-8 | dim x f32)
//! ```

use std::path::Path;

use folde_core::model::EmbeddingStore;
use folde_core::variant::Variant;

use crate::error::{io_at, Error, Result};

pub const MAGIC: &[u8; 5] = b"FLDE1";

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated embedding file while reading {what}")))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingStore> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(MAGIC.len(), "magic").ok() != Some(&MAGIC[..]) {
        return Err(Error::Format("not an FLDE1 embedding file".into()));
    }
    let count = r.u32("count")? as usize;
    let dim = r.u32("dim")? as usize;
    let mut rows = Vec::with_capacity(count.min(1 << 20));
    for k in 0..count {
        let len = r.u16("id length")? as usize;
        let id = std::str::from_utf8(r.take(len, "variant id")?)
            .map_err(|_| Error::Format(format!("record {k}: variant id is not utf-8")))?;
        let variant = Variant::parse_unchecked(id)?;
        let raw = r.take(dim * 4, "vector")?;
        let vector: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format(format!("record {k} ({id}): non-finite value")));
        }
        rows.push((variant, vector));
    }
    if r.at != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after {count} records of dim {dim}",
            bytes.len() - r.at
        )));
    }
    Ok(EmbeddingStore::from_rows(dim, rows)?)
}

pub fn encode_embeddings(store: &EmbeddingStore) -> Result<Vec<u8>> {
    let rows = store.rows();
    let count = u32::try_from(rows.len()).map_err(|_| Error::Format("too many embedding rows".into()))?;
    let mut out = Vec::with_capacity(13 + rows.len() * (16 + 4 * store.dim()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&(store.dim() as u32).to_le_bytes());
    for (variant, vector) in rows {
        let id = variant.to_string();
        let len = u16::try_from(id.len()).map_err(|_| Error::Format(format!("variant id too long: {id}")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for x in vector {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    decode_embeddings(&std::fs::read(path).map_err(io_at(path))?)
}

pub fn save_embeddings(path: impl AsRef<Path>, store: &EmbeddingStore) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_embeddings(store)?).map_err(io_at(path))
}
