//! File formats, simulation runner, reports and the live campaign service
//! built on `folde-core`.

pub mod campaign;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;
pub mod simulate;

pub use error::{Error, Result};
pub use folde_core as core;
