//! Core engine for active-learning-assisted directed evolution.
//!
//! Round one ranks single mutants by naturalness (a log-likelihood ratio from a
//! precomputed log-probability table). Later rounds pretrain an ensemble of
//! ranking networks on naturalness, fine-tune it on measured activities, and
//! build each batch greedily with a constant-liar update over the ensemble
//! covariance. The [`sim`] module replays whole campaigns against known
//! landscapes.
//!
//! The crate is `no_std` and only needs an allocator; file formats, parallel
//! replicates and the campaign service live in the `folde` crate.

#![no_std]
// `!(x > y)` is used on purpose to reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod amino;
pub mod error;
pub mod forest;
pub mod linalg;
pub mod model;
pub mod naturalness;
pub mod pipeline;
pub mod ranker;
pub mod rng;
pub mod selector;
pub mod sim;
pub mod stats;
pub mod variant;

pub use amino::{AminoAcid, ALPHABET};
pub use error::{Error, Result};
pub use model::{Dataset, EmbeddingStore, LogProbMatrix, Record};
pub use variant::{Mutation, Sequence, Variant};
