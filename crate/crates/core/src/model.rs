//! Validated in-memory datasets, embedding stores and log-probability tables.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::amino::AminoAcid;
use crate::error::{Error, Result};
use crate::variant::{Sequence, Variant};

/// Row-normalization tolerance on log-sum-exp, loose enough for float32 exports.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub variant: Variant,
    pub activity: f64,
}

/// Measured activities for variants of one reference sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    reference: Sequence,
    records: Vec<Record>,
    index: BTreeMap<Variant, usize>,
}

impl Dataset {
    pub fn new(reference: Sequence, records: Vec<Record>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::TooFewRecords {
                needed: 2,
                found: records.len(),
            });
        }
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            r.variant.check_reference(&reference)?;
            if !r.activity.is_finite() {
                return Err(Error::NonFinite(r.variant.to_string()));
            }
            if index.insert(r.variant.clone(), i).is_some() {
                return Err(Error::DuplicateVariant(r.variant.to_string()));
            }
        }
        Ok(Dataset {
            reference,
            records,
            index,
        })
    }

    pub fn reference(&self) -> &Sequence {
        &self.reference
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn index_of(&self, variant: &Variant) -> Option<usize> {
        self.index.get(variant).copied()
    }

    pub fn activity(&self, variant: &Variant) -> Option<f64> {
        self.index_of(variant).map(|i| self.records[i].activity)
    }

    pub fn activities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.activity).collect()
    }
}

/// Fixed-length embedding vectors keyed by variant, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    rows: Vec<(Variant, Vec<f32>)>,
    index: BTreeMap<Variant, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding dim must be positive".into()));
        }
        Ok(EmbeddingStore {
            dim,
            rows: Vec::new(),
            index: BTreeMap::new(),
        })
    }

    pub fn from_rows(dim: usize, rows: Vec<(Variant, Vec<f32>)>) -> Result<Self> {
        let mut store = EmbeddingStore::new(dim)?;
        for (v, e) in rows {
            store.insert(v, e)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, variant: Variant, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(variant.to_string()));
        }
        if self.index.contains_key(&variant) {
            return Err(Error::DuplicateVariant(variant.to_string()));
        }
        self.index.insert(variant.clone(), self.rows.len());
        self.rows.push((variant, vector));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, variant: &Variant) -> Option<&[f32]> {
        self.index.get(variant).map(|&i| self.rows[i].1.as_slice())
    }

    pub fn contains(&self, variant: &Variant) -> bool {
        self.index.contains_key(variant)
    }

    pub fn rows(&self) -> &[(Variant, Vec<f32>)] {
        &self.rows
    }

    /// Row-major matrix of embeddings for `variants`.
    pub fn gather(&self, variants: &[Variant]) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(variants.len() * self.dim);
        for v in variants {
            let row = self.get(v).ok_or_else(|| Error::MissingEmbedding(v.to_string()))?;
            out.extend_from_slice(row);
        }
        Ok(out)
    }
}

/// Per-position natural-log probabilities over the 20 amino acids, columns in
/// [`crate::amino::ALPHABET`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbMatrix {
    values: Vec<[f64; 20]>,
}

pub fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(row.iter().map(|&x| libm::exp(x - max)).sum::<f64>())
}

impl LogProbMatrix {
    pub fn new(values: Vec<[f64; 20]>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("log-probability matrix"));
        }
        for (row, r) in values.iter().enumerate() {
            for &value in r {
                if !value.is_finite() {
                    return Err(Error::NonFinite(alloc::format!("log-probability row {row}")));
                }
                if value > 0.0 {
                    return Err(Error::PositiveLogProb { row, value });
                }
            }
            let lse = log_sum_exp(r);
            if lse.abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::NotNormalized { row, lse });
            }
        }
        Ok(LogProbMatrix { values })
    }

    /// Normalizes arbitrary finite logits row by row.
    pub fn from_logits(logits: Vec<[f64; 20]>) -> Result<Self> {
        let values = logits
            .into_iter()
            .map(|mut r| {
                let lse = log_sum_exp(&r);
                for x in r.iter_mut() {
                    *x = (*x - lse).min(0.0);
                }
                r
            })
            .collect();
        LogProbMatrix::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Log-probability of `aa` at a 1-based position.
    pub fn get(&self, position: usize, aa: AminoAcid) -> Option<f64> {
        position
            .checked_sub(1)
            .and_then(|i| self.values.get(i))
            .map(|r| r[aa.index()])
    }

    pub fn rows(&self) -> &[[f64; 20]] {
        &self.values
    }

    pub fn check_length(&self, reference: &Sequence) -> Result<()> {
        if self.len() != reference.len() {
            return Err(Error::DimensionMismatch {
                expected: reference.len(),
                found: self.len(),
            });
        }
        Ok(())
    }
}
