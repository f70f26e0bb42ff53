use serde::{Deserialize, Serialize};

use super::EmbedError;
use crate::graph::Relation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Linear map of the averaged word vectors.
    MeanPool,
    /// Bidirectional LSTM, hidden states averaged over time.
    Recurrent,
}

impl std::str::FromStr for EncoderKind {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean-pool" | "meanpool" | "mean" => Ok(EncoderKind::MeanPool),
            "recurrent" | "bilstm" | "recurrent-bidirectional" => Ok(EncoderKind::Recurrent),
            other => Err(EmbedError::Config(format!("unknown encoder `{other}`"))),
        }
    }
}

/// One value per relation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerRelation<T> {
    pub entity_stance: T,
    pub ad_stance: T,
    pub ad_word: T,
    pub word_issue: T,
}

impl<T: Copy> PerRelation<T> {
    pub fn get(&self, r: Relation) -> T {
        match r {
            Relation::EntityStance => self.entity_stance,
            Relation::AdStance => self.ad_stance,
            Relation::AdWord => self.ad_word,
            Relation::WordIssue => self.word_issue,
        }
    }

    pub fn uniform(v: T) -> Self {
        PerRelation {
            entity_stance: v,
            ad_stance: v,
            ad_word: v,
            word_issue: v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub encoder_hidden: usize,
    pub negatives: PerRelation<usize>,
    pub lambda: PerRelation<f64>,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub encoder_kind: EncoderKind,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 300,
            encoder_hidden: 150,
            negatives: PerRelation {
                entity_stance: 2,
                ad_stance: 2,
                ad_word: 5,
                word_issue: 5,
            },
            lambda: PerRelation::uniform(1.0),
            lr: 0.001,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            encoder_kind: EncoderKind::MeanPool,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: String| Err(EmbedError::Config(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.encoder_kind == EncoderKind::Recurrent && self.dim != 2 * self.encoder_hidden {
            return bad(format!(
                "recurrent encoder needs dim = 2 x hidden, got dim {} and hidden {}",
                self.dim, self.encoder_hidden
            ));
        }
        if Relation::ALL.iter().any(|r| self.negatives.get(*r) == 0) {
            return bad("negative counts must be positive".into());
        }
        if Relation::ALL.iter().any(|r| !(self.lambda.get(*r) >= 0.0 && self.lambda.get(*r).is_finite())) {
            return bad("relation weights must be finite and nonnegative".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation fraction must be in (0, 1), got {}", self.validation_fraction));
        }
        Ok(())
    }
}
