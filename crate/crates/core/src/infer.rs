//! Nearest-label inference over trained embeddings, entity views and
//! holdout metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AdRecord;
use crate::embed::EmbeddingModel;
use crate::labels::{Issue, Stance, View};
use crate::textproc::tokenize;

#[derive(Debug, Error)]
pub enum InferError {
    #[error("entity `{0}` has no predicted ads")]
    NoVotes(String),
    #[error("no {0} rows left after dropping unlabeled cases")]
    EmptyHoldout(&'static str),
    #[error("holdout ad `{0}` has no prediction")]
    MissingPrediction(String),
    #[error("holdout ad `{0}` appears twice")]
    DuplicateHoldout(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for InferError {
    fn from(e: csv::Error) -> Self {
        match e.position() {
            Some(p) => InferError::Parse {
                line: p.line(),
                message: e.to_string(),
            },
            None => InferError::Csv(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    /// Raw dot product, the training similarity.
    #[default]
    Dot,
    /// Cosine similarity, for ablations only.
    Cosine,
}

impl Similarity {
    fn score(self, a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        match self {
            Similarity::Dot => d,
            Similarity::Cosine => {
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    0.0
                } else {
                    d / (na * nb)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub ad_id: String,
    pub stance: Stance,
    pub stance_score: f64,
    pub issue: Issue,
    pub issue_score: f64,
}

/// First strictly greater score wins, so ties go to the earliest label.
fn argmax<T: Copy>(labels: &[T], score: impl Fn(T) -> f64) -> (T, f64) {
    let mut best = (labels[0], score(labels[0]));
    for &l in &labels[1..] {
        let s = score(l);
        if s > best.1 {
            best = (l, s);
        }
    }
    best
}

/// Ties resolve in the order pro-biden, pro-trump, anti-biden, anti-trump.
pub fn predict_stance(ad: &[f64], model: &EmbeddingModel, sim: Similarity) -> (Stance, f64) {
    argmax(&Stance::ALL, |s| sim.score(ad, model.stance_vector(s)))
}

/// Ties resolve alphabetically by issue name.
pub fn predict_issue(ad: &[f64], model: &EmbeddingModel, sim: Similarity) -> (Issue, f64) {
    argmax(&Issue::ALL, |i| sim.score(ad, model.issue_vector(i)))
}

/// Predicts every ad; exact duplicates share tokens and so share predictions.
pub fn predict_ads(ads: &[AdRecord], model: &EmbeddingModel, sim: Similarity) -> Vec<Prediction> {
    ads.iter()
        .map(|ad| {
            let e = model.encode(&tokenize(&ad.text));
            let (stance, stance_score) = predict_stance(&e, model, sim);
            let (issue, issue_score) = predict_issue(&e, model, sim);
            Prediction {
                ad_id: ad.id.clone(),
                stance,
                stance_score,
                issue,
                issue_score,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityView {
    pub view: View,
    pub support: f64,
    pub ads: usize,
}

/// Majority vote of the ads' predicted stances; ties go to liberal.
pub fn entity_view(entity: &str, stances: &[Stance]) -> Result<EntityView, InferError> {
    if stances.is_empty() {
        return Err(InferError::NoVotes(entity.to_owned()));
    }
    let liberal = stances.iter().filter(|s| s.view() == View::Liberal).count();
    let conservative = stances.len() - liberal;
    let (view, votes) = if liberal >= conservative {
        (View::Liberal, liberal)
    } else {
        (View::Conservative, conservative)
    };
    Ok(EntityView {
        view,
        support: votes as f64 / stances.len() as f64,
        ads: stances.len(),
    })
}

/// Views for every funding entity with at least one predicted ad.
pub fn entity_views(ads: &[AdRecord], predictions: &[Prediction]) -> BTreeMap<String, EntityView> {
    let by_id: BTreeMap<&str, Stance> = predictions.iter().map(|p| (p.ad_id.as_str(), p.stance)).collect();
    let mut votes: BTreeMap<&str, Vec<Stance>> = BTreeMap::new();
    for ad in ads {
        if let Some(s) = by_id.get(ad.id.as_str()) {
            votes.entry(ad.funding_entity.as_str()).or_default().push(*s);
        }
    }
    votes
        .into_iter()
        .map(|(e, v)| (e.to_owned(), entity_view(e, &v).expect("nonempty by construction")))
        .collect()
}

/// Gold label or the evaluation-only "unlabeled" marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gold<T> {
    Label(T),
    Unlabeled,
}

impl<T: FromStr> Gold<T> {
    fn parse(raw: &str, marker: &str) -> Result<Self, String>
    where
        T::Err: std::fmt::Display,
    {
        let raw = raw.trim();
        if raw.eq_ignore_ascii_case(marker) {
            Ok(Gold::Unlabeled)
        } else {
            raw.parse().map(Gold::Label).map_err(|e: T::Err| e.to_string())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoldoutRow {
    pub ad_id: String,
    pub stance: Gold<Stance>,
    pub issue: Gold<Issue>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HoldoutSet {
    pub rows: Vec<HoldoutRow>,
}

#[derive(Deserialize)]
struct RawHoldout {
    ad_id: String,
    stance: String,
    issue: String,
}

impl HoldoutSet {
    /// Reads `ad_id,stance,issue` with `non-stance` / `non-issue` markers.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, InferError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for rec in rdr.deserialize::<RawHoldout>() {
            let rec = rec?;
            let line = rows.len() as u64 + 2;
            let parse_err = |message: String| InferError::Parse { line, message };
            if !seen.insert(rec.ad_id.clone()) {
                return Err(InferError::DuplicateHoldout(rec.ad_id));
            }
            rows.push(HoldoutRow {
                stance: Gold::parse(&rec.stance, "non-stance").map_err(parse_err)?,
                issue: Gold::parse(&rec.issue, "non-issue").map_err(parse_err)?,
                ad_id: rec.ad_id,
            });
        }
        Ok(HoldoutSet { rows })
    }
}

pub fn write_predictions<W: Write>(writer: W, predictions: &[Prediction]) -> Result<(), InferError> {
    let mut w = csv::Writer::from_writer(writer);
    for p in predictions {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| InferError::Csv(e.to_string()))
}

pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<Prediction>, InferError> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(InferError::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub support: usize,
    /// Per-class F1 for classes present in gold.
    pub per_class_f1: BTreeMap<String, f64>,
}

/// Accuracy and macro-F1 over classes that occur in `gold`. A class with
/// no true positives scores F1 = 0.
pub fn classification_metrics<T: Ord + Copy + ToString>(gold: &[T], pred: &[T]) -> Option<Metrics> {
    assert_eq!(gold.len(), pred.len(), "gold and predictions must pair up");
    if gold.is_empty() {
        return None;
    }
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    let classes: BTreeSet<T> = gold.iter().copied().collect();
    let mut per_class_f1 = BTreeMap::new();
    for c in &classes {
        let tp = gold.iter().zip(pred).filter(|(g, p)| *g == c && *p == c).count();
        let fp = pred.iter().filter(|p| *p == c).count() - tp;
        let fn_ = gold.iter().filter(|g| *g == c).count() - tp;
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        per_class_f1.insert(c.to_string(), f1);
    }
    let macro_f1 = per_class_f1.values().sum::<f64>() / classes.len() as f64;
    Some(Metrics {
        accuracy: correct as f64 / gold.len() as f64,
        macro_f1,
        support: gold.len(),
        per_class_f1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub stance: Metrics,
    pub issue: Metrics,
}

fn paired<T: Copy>(
    holdout: &HoldoutSet,
    by_id: &BTreeMap<&str, &Prediction>,
    gold: impl Fn(&HoldoutRow) -> Gold<T>,
    pred: impl Fn(&Prediction) -> T,
) -> Result<(Vec<T>, Vec<T>), InferError> {
    let mut g = Vec::new();
    let mut p = Vec::new();
    for row in &holdout.rows {
        if let Gold::Label(label) = gold(row) {
            let hit = by_id
                .get(row.ad_id.as_str())
                .ok_or_else(|| InferError::MissingPrediction(row.ad_id.clone()))?;
            g.push(label);
            p.push(pred(hit));
        }
    }
    Ok((g, p))
}

pub fn evaluate_stance(predictions: &[Prediction], holdout: &HoldoutSet) -> Result<Metrics, InferError> {
    let by_id = predictions.iter().map(|p| (p.ad_id.as_str(), p)).collect();
    let (g, p) = paired(holdout, &by_id, |r| r.stance, |p| p.stance)?;
    classification_metrics(&g, &p).ok_or(InferError::EmptyHoldout("stance"))
}

pub fn evaluate_issue(predictions: &[Prediction], holdout: &HoldoutSet) -> Result<Metrics, InferError> {
    let by_id = predictions.iter().map(|p| (p.ad_id.as_str(), p)).collect();
    let (g, p) = paired(holdout, &by_id, |r| r.issue, |p| p.issue)?;
    classification_metrics(&g, &p).ok_or(InferError::EmptyHoldout("issue"))
}

/// Stance metrics skip `non-stance` rows, issue metrics skip `non-issue` rows.
pub fn evaluate(predictions: &[Prediction], holdout: &HoldoutSet) -> Result<Evaluation, InferError> {
    Ok(Evaluation {
        stance: evaluate_stance(predictions, holdout)?,
        issue: evaluate_issue(predictions, holdout)?,
    })
}
