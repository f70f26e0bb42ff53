//! End-to-end glue: corpus bundle, graph assembly, training and inference.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{dedup_by_content, parse_ads, AdCorpus, CorpusError, DedupMap, LoadSummary};
use crate::embed::{train, EmbedError, EmbeddingModel, TrainConfig, WordVectors};
use crate::graph::{build_graph, AdGraph, GraphError};
use crate::infer::{predict_ads, InferError, Prediction, Similarity};
use crate::labels::Issue;
use crate::lexicon::{match_issues, IssueLexicon, LexiconError};
use crate::stats::StatsError;
use crate::textproc::tokenize;
use crate::weaklabel::{weak_label_corpus, CueConfig, WeakLabels};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
}

impl PipelineError {
    /// 2 for unusable settings, 3 for bad data, 4 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Embed(EmbedError::Config(_)) => 2,
            PipelineError::Stats(_) | PipelineError::Embed(EmbedError::NonFinite { .. }) => 4,
            _ => 3,
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, body: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, body).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Ingested archive: every loaded ad, the duplicate groups and the load
/// summary. Stored as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusBundle {
    pub summary: LoadSummary,
    pub dedup: DedupMap,
    pub ads: AdCorpus,
}

impl CorpusBundle {
    pub fn from_corpus(ads: AdCorpus, summary: LoadSummary) -> Self {
        let (_, dedup) = dedup_by_content(&ads);
        CorpusBundle { summary, dedup, ads }
    }

    pub fn ingest(raw: &str) -> Self {
        let (ads, summary) = parse_ads(raw);
        CorpusBundle::from_corpus(ads, summary)
    }

    /// One ad per distinct text.
    pub fn representatives(&self) -> AdCorpus {
        dedup_by_content(&self.ads).0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Ok(serde_json::from_str(&read_file(path)?)?)
    }
}

/// Weak labels over the deduplicated ads.
pub fn weak_labels(bundle: &CorpusBundle, cues: &CueConfig) -> WeakLabels {
    weak_label_corpus(&bundle.representatives(), cues)
}

pub fn lexicon_matches(corpus: &AdCorpus, lexicon: &IssueLexicon) -> BTreeMap<String, BTreeSet<(String, Issue)>> {
    corpus
        .ads()
        .iter()
        .map(|ad| (ad.id.clone(), match_issues(&tokenize(&ad.text), lexicon)))
        .collect()
}

/// Graph over the deduplicated ads. Labels for ads outside the
/// representative set are dropped; entities must still exist.
pub fn assemble_graph(bundle: &CorpusBundle, lexicon: &IssueLexicon, labels: &WeakLabels) -> Result<AdGraph, PipelineError> {
    let reps = bundle.representatives();
    let ad_stances = labels
        .ad_stances
        .iter()
        .filter(|(id, _)| reps.get(id).is_some())
        .map(|(id, l)| (id.clone(), l.clone()))
        .collect();
    Ok(build_graph(&reps, &labels.entity_stances, &ad_stances, &lexicon_matches(&reps, lexicon))?)
}

pub fn train_model(
    bundle: &CorpusBundle,
    lexicon: &IssueLexicon,
    labels: &WeakLabels,
    vectors: &WordVectors,
    config: &TrainConfig,
) -> Result<EmbeddingModel, PipelineError> {
    let graph = assemble_graph(bundle, lexicon, labels)?;
    Ok(train(&graph, vectors, config)?)
}

/// Predictions for every loaded ad, duplicates included.
pub fn infer(bundle: &CorpusBundle, model: &EmbeddingModel, sim: Similarity) -> Vec<Prediction> {
    predict_ads(bundle.ads.ads(), model, sim)
}
