//! Joint embedding of ads, entities, stances, issues and lexicon words.

mod config;
mod encoder;
mod io;
mod model;
mod train;
mod vectors;

use thiserror::Error;

pub use config::{EncoderKind, PerRelation, TrainConfig};
pub use encoder::EncoderShape;
pub use io::{ArraySpan, ModelManifest};
pub use model::{EmbeddingModel, EpochRecord, Populations};
pub use train::{ad_inputs, draw_terms, loss_and_grad, pair_loss, softplus, train, Term};
pub use vectors::WordVectors;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("graph has no edges to train on")]
    EmptyGraph,
    #[error("parameters became non-finite at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("word vectors: {0}")]
    WordVectors(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}
