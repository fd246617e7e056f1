//! On-disk formats.

pub mod checkpoint;
pub mod dataset;
pub mod embeddings;
pub mod logprobs;
pub mod results;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use dataset::{load_dataset, parse_dataset, render_dataset, save_dataset};
pub use embeddings::{decode_embeddings, encode_embeddings, load_embeddings, save_embeddings};
pub use logprobs::{load_logprobs, parse_logprobs, render_logprobs, save_logprobs};
pub use results::{load_results, parse_results, render_results, save_results};
