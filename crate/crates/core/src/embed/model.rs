use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{EncoderKind, TrainConfig};
use super::encoder::EncoderShape;
use super::vectors::WordVectors;
use crate::graph::{AdGraph, NodeId, NodeKind};
use crate::labels::{Issue, Stance};
use crate::textproc::TokenSeq;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Loss on the training terms before that epoch's update; absent for epoch 0.
    pub train_loss: Option<f64>,
    pub validation_loss: f64,
}

/// Node counts of the free-embedding kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Populations {
    pub entities: usize,
    pub stances: usize,
    pub issues: usize,
    pub words: usize,
}

impl Populations {
    pub fn total(&self) -> usize {
        self.entities + self.stances + self.issues + self.words
    }
}

/// Free node embeddings, encoder weights and the frozen word-vector table.
/// All trainable values live in `params`: node table first (entities,
/// stances, issues, lexicon words; `dim` values per node), encoder after.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) kind: EncoderKind,
    pub(crate) dim: usize,
    pub(crate) hidden: usize,
    pub(crate) entities: Vec<String>,
    pub(crate) words: Vec<String>,
    pub(crate) params: Vec<f64>,
    pub(crate) vectors: WordVectors,
    pub(crate) config: TrainConfig,
    pub(crate) history: Vec<EpochRecord>,
}

impl EmbeddingModel {
    /// Fresh model for `graph`. Word vectors are narrowed to tokens that
    /// occur in the graph's ads.
    pub fn init<R: Rng + ?Sized>(
        graph: &AdGraph,
        vectors: &WordVectors,
        config: &TrainConfig,
        rng: &mut R,
    ) -> Self {
        let vocab: BTreeSet<String> = graph
            .ads
            .iter()
            .flat_map(|a| a.tokens.iter().map(str::to_owned))
            .collect();
        let vectors = vectors.restrict(&vocab);
        let hidden = match config.encoder_kind {
            EncoderKind::MeanPool => 0,
            EncoderKind::Recurrent => config.encoder_hidden,
        };
        let mut m = EmbeddingModel {
            kind: config.encoder_kind,
            dim: config.dim,
            hidden,
            entities: graph.entities.clone(),
            words: graph.words.clone(),
            params: Vec::new(),
            vectors,
            config: config.clone(),
            history: Vec::new(),
        };
        let nodes = m.populations().total() * m.dim;
        let a = 0.5 / m.dim as f64;
        m.params = (0..nodes).map(|_| rng.random_range(-a..=a)).collect();
        let enc = m.shape().init(rng);
        m.params.extend(enc);
        m
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vectors(&self) -> &WordVectors {
        &self.vectors
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn populations(&self) -> Populations {
        Populations {
            entities: self.entities.len(),
            stances: Stance::ALL.len(),
            issues: Issue::ALL.len(),
            words: self.words.len(),
        }
    }

    pub fn shape(&self) -> EncoderShape {
        EncoderShape {
            kind: self.kind,
            input: self.vectors.dim(),
            dim: self.dim,
            hidden: self.hidden,
        }
    }

    /// Offset of the first node of `kind` in `params`; `None` for ads.
    pub fn kind_offset(&self, kind: NodeKind) -> Option<usize> {
        let p = self.populations();
        let base = match kind {
            NodeKind::Ad => return None,
            NodeKind::Entity => 0,
            NodeKind::Stance => p.entities,
            NodeKind::Issue => p.entities + p.stances,
            NodeKind::LexWord => p.entities + p.stances + p.issues,
        };
        Some(base * self.dim)
    }

    pub fn encoder_offset(&self) -> usize {
        self.populations().total() * self.dim
    }

    pub(crate) fn node_range(&self, node: NodeId) -> std::ops::Range<usize> {
        let start = self.kind_offset(node.kind).expect("ads have no table row") + node.index * self.dim;
        start..start + self.dim
    }

    pub fn node_vector(&self, node: NodeId) -> Option<&[f64]> {
        let count = match node.kind {
            NodeKind::Ad => return None,
            NodeKind::Entity => self.entities.len(),
            NodeKind::Stance => Stance::ALL.len(),
            NodeKind::Issue => Issue::ALL.len(),
            NodeKind::LexWord => self.words.len(),
        };
        (node.index < count).then(|| &self.params[self.node_range(node)])
    }

    pub fn stance_vector(&self, s: Stance) -> &[f64] {
        &self.params[self.node_range(NodeId::new(NodeKind::Stance, s.index()))]
    }

    pub fn issue_vector(&self, i: Issue) -> &[f64] {
        &self.params[self.node_range(NodeId::new(NodeKind::Issue, i.index()))]
    }

    pub fn encoder_params(&self) -> &[f64] {
        &self.params[self.encoder_offset()..]
    }

    pub(crate) fn lookup(&self, tokens: &TokenSeq) -> Vec<Option<usize>> {
        tokens.iter().map(|t| self.vectors.index_of(t)).collect()
    }

    pub(crate) fn inputs<'a>(&'a self, ids: &[Option<usize>]) -> Vec<Option<&'a [f64]>> {
        ids.iter().map(|i| i.map(|i| self.vectors.row(i))).collect()
    }

    pub(crate) fn encode_ids(&self, ids: &[Option<usize>]) -> Vec<f64> {
        self.shape().forward(self.encoder_params(), &self.inputs(ids))
    }

    /// Ad embedding; unknown tokens contribute zero vectors.
    pub fn encode(&self, tokens: &TokenSeq) -> Vec<f64> {
        self.encode_ids(&self.lookup(tokens))
    }
}
