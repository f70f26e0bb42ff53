//! Versioned binary model format.
//!
//! Header: magic `ADLENSEM`, then little-endian u32 fields: version, dim,
//! entity/stance/issue/word populations, encoder kind, word-vector dim,
//! hidden size, vocabulary size, manifest length. The JSON manifest follows,
//! then f32 arrays: trainable parameters, then word vectors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{EncoderKind, TrainConfig};
use super::model::{EmbeddingModel, EpochRecord, Populations};
use super::vectors::WordVectors;
use super::EmbedError;
use crate::graph::NodeKind;

const MAGIC: &[u8; 8] = b"ADLENSEM";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArraySpan {
    pub offset: usize,
    pub len: usize,
}

/// Where each node's vector sits in the float section. Node `i` of a kind
/// starts at `offset + i * dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub version: u32,
    pub dim: usize,
    pub encoder: EncoderKind,
    pub populations: Populations,
    pub node_offsets: Vec<(NodeKind, ArraySpan)>,
    pub encoder_params: ArraySpan,
    pub word_vectors: ArraySpan,
    pub entities: Vec<String>,
    pub lexicon_words: Vec<String>,
    pub vocabulary: Vec<String>,
    pub config: TrainConfig,
    pub history: Vec<EpochRecord>,
}

impl EmbeddingModel {
    pub fn manifest(&self) -> ModelManifest {
        let p = self.populations();
        let node_offsets = [
            (NodeKind::Entity, p.entities),
            (NodeKind::Stance, p.stances),
            (NodeKind::Issue, p.issues),
            (NodeKind::LexWord, p.words),
        ]
        .into_iter()
        .map(|(k, n)| {
            let offset = self.kind_offset(k).expect("table kind");
            (k, ArraySpan { offset, len: n * self.dim })
        })
        .collect();
        ModelManifest {
            version: VERSION,
            dim: self.dim,
            encoder: self.kind,
            populations: p,
            node_offsets,
            encoder_params: ArraySpan {
                offset: self.encoder_offset(),
                len: self.params.len() - self.encoder_offset(),
            },
            word_vectors: ArraySpan {
                offset: self.params.len(),
                len: self.vectors.len() * self.vectors.dim(),
            },
            entities: self.entities.clone(),
            lexicon_words: self.words.clone(),
            vocabulary: self.vectors.words().to_vec(),
            config: self.config.clone(),
            history: self.history.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest = serde_json::to_vec(&self.manifest()).expect("manifest serializes");
        let p = self.populations();
        let kind = match self.kind {
            EncoderKind::MeanPool => 0u32,
            EncoderKind::Recurrent => 1,
        };
        let mut out = Vec::with_capacity(64 + manifest.len() + 4 * (self.params.len() + self.vectors.data().len()));
        out.extend_from_slice(MAGIC);
        for v in [
            VERSION,
            self.dim as u32,
            p.entities as u32,
            p.stances as u32,
            p.issues as u32,
            p.words as u32,
            kind,
            self.vectors.dim() as u32,
            self.hidden as u32,
            self.vectors.len() as u32,
            manifest.len() as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&manifest);
        for x in self.params.iter().chain(self.vectors.data()) {
            out.extend_from_slice(&(*x as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbedError> {
        let bad = |m: &str| EmbedError::Format(m.to_owned());
        if bytes.len() < 8 + 44 || &bytes[..8] != MAGIC {
            return Err(bad("not a model file"));
        }
        let mut header = [0u32; 11];
        for (i, h) in header.iter_mut().enumerate() {
            let at = 8 + 4 * i;
            *h = u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        }
        let [version, dim, _entities, stances, issues, _words, kind, wv_dim, hidden, vocab, mlen] =
            header.map(|v| v as usize);
        if version != VERSION as usize {
            return Err(EmbedError::Format(format!("unsupported model version {version}")));
        }
        if stances != 4 || issues != 13 {
            return Err(bad("unexpected label populations"));
        }
        let body = 8 + 44;
        let manifest: ModelManifest = serde_json::from_slice(bytes.get(body..body + mlen).ok_or_else(|| bad("truncated manifest"))?)
            .map_err(|e| EmbedError::Format(format!("manifest: {e}")))?;
        let floats = &bytes[body + mlen..];
        if !floats.len().is_multiple_of(4) {
            return Err(bad("float section is not 4-byte aligned"));
        }
        let values: Vec<f64> = floats
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        let n_params = manifest.word_vectors.offset;
        if values.len() != n_params + vocab * wv_dim || manifest.vocabulary.len() != vocab || manifest.dim != dim {
            return Err(bad("array sizes disagree with header"));
        }
        let entries = manifest
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), values[n_params + i * wv_dim..n_params + (i + 1) * wv_dim].to_vec()))
            .collect();
        let model = EmbeddingModel {
            kind: match kind {
                0 => EncoderKind::MeanPool,
                1 => EncoderKind::Recurrent,
                _ => return Err(bad("unknown encoder kind")),
            },
            dim,
            hidden,
            entities: manifest.entities,
            words: manifest.lexicon_words,
            params: values[..n_params].to_vec(),
            vectors: WordVectors::new(wv_dim, entries)?,
            config: manifest.config,
            history: manifest.history,
        };
        if model.encoder_offset() + model.shape().param_count() != n_params {
            return Err(bad("parameter count disagrees with encoder shape"));
        }
        Ok(model)
    }

    /// Writes the model and a `<path>.manifest.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<PathBuf, EmbedError> {
        let io = |e: std::io::Error| EmbedError::Io(format!("{}: {e}", path.display()));
        fs::write(path, self.to_bytes()).map_err(io)?;
        let mut side = path.as_os_str().to_owned();
        side.push(".manifest.json");
        let side = PathBuf::from(side);
        let json = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        fs::write(&side, json).map_err(io)?;
        Ok(side)
    }

    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let bytes = fs::read(path).map_err(|e| EmbedError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::train;
    use crate::graph::{AdGraph, AdNode, Edge, EdgeSets};
    use crate::labels::Stance;
    use crate::textproc::tokenize;

    fn model(kind: EncoderKind) -> EmbeddingModel {
        let g = AdGraph {
            ads: vec![
                AdNode { id: "a".into(), tokens: tokenize("vote early") },
                AdNode { id: "b".into(), tokens: tokenize("wear a mask") },
            ],
            entities: vec!["E".into()],
            words: vec!["mask".into()],
            edges: EdgeSets {
                entity_stance: vec![Edge { source: 0, target: Stance::ProBiden.index() }],
                ad_stance: vec![Edge { source: 0, target: Stance::ProBiden.index() }],
                ad_word: vec![Edge { source: 1, target: 0 }],
                word_issue: vec![Edge { source: 0, target: 2 }],
            },
        };
        let wv = WordVectors::new(
            3,
            vec![
                ("vote".into(), vec![0.1, 0.2, 0.3]),
                ("mask".into(), vec![-0.5, 0.25, 0.0]),
                ("unused".into(), vec![1.0, 1.0, 1.0]),
            ],
        )
        .unwrap();
        let cfg = TrainConfig {
            dim: 4,
            encoder_hidden: 2,
            encoder_kind: kind,
            max_epochs: 3,
            seed: 1,
            ..TrainConfig::default()
        };
        train(&g, &wv, &cfg).unwrap()
    }

    #[test]
    fn round_trip_through_bytes() {
        for kind in [EncoderKind::MeanPool, EncoderKind::Recurrent] {
            let m = model(kind);
            assert_eq!(m.vectors().len(), 2, "vectors narrowed to ad vocabulary");
            let bytes = m.to_bytes();
            let back = EmbeddingModel::from_bytes(&bytes).unwrap();
            assert_eq!(back.to_bytes(), bytes);
            for (a, b) in m.params().iter().zip(back.params()) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-30));
            }
            let t = tokenize("wear a mask");
            let (ea, eb) = (m.encode(&t), back.encode(&t));
            for (a, b) in ea.iter().zip(&eb) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn corrupt_input_rejected() {
        let bytes = model(EncoderKind::MeanPool).to_bytes();
        assert!(EmbeddingModel::from_bytes(b"nope").is_err());
        assert!(EmbeddingModel::from_bytes(&bytes[..bytes.len() - 4]).is_err());
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        assert!(matches!(EmbeddingModel::from_bytes(&wrong), Err(EmbedError::Format(_))));
    }

    #[test]
    fn save_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let m = model(EncoderKind::MeanPool);
        let side = m.save(&path).unwrap();
        let manifest: ModelManifest = serde_json::from_str(&fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(manifest, m.manifest());
        assert_eq!(EmbeddingModel::load(&path).unwrap().to_bytes(), m.to_bytes());
    }
}
