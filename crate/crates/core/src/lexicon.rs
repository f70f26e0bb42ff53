//! Per-issue PMI lexicon induction and lexicon matching.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::Issue;
use crate::textproc::{ngrams, tokenize, TokenSeq};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("`{0}` does not occur in the corpus")]
    UndefinedPmi(String),
    #[error("issue `{0}` has no documents")]
    IssueAbsent(Issue),
    #[error("issue corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid lexicon json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueDoc {
    pub issue: Issue,
    pub tokens: TokenSeq,
}

/// Issue-tagged reference documents used to induce the lexicon.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueDocCorpus {
    pub docs: Vec<IssueDoc>,
}

#[derive(Deserialize)]
struct RawIssueDoc {
    issue: String,
    text: String,
}

impl IssueDocCorpus {
    pub fn push(&mut self, issue: Issue, text: &str) {
        self.docs.push(IssueDoc {
            issue,
            tokens: tokenize(text),
        });
    }

    /// Parses JSONL lines of `{"issue": ..., "text": ...}`.
    pub fn from_jsonl(raw: &str) -> Result<Self, LexiconError> {
        let mut corpus = IssueDocCorpus::default();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| LexiconError::Parse {
                line: i + 1,
                message,
            };
            let doc: RawIssueDoc =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let issue = doc.issue.parse().map_err(|e: crate::labels::LabelParseError| parse_err(e.to_string()))?;
            corpus.push(issue, &doc.text);
        }
        Ok(corpus)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let raw = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        IssueDocCorpus::from_jsonl(&raw)
    }

    pub fn issues(&self) -> BTreeSet<Issue> {
        self.docs.iter().map(|d| d.issue).collect()
    }
}

/// N-gram counts per issue and over the whole corpus.
#[derive(Clone, Debug)]
pub struct NgramCounts {
    per_issue: BTreeMap<Issue, (HashMap<String, usize>, usize)>,
    global: HashMap<String, usize>,
    total: usize,
}

impl NgramCounts {
    pub fn new(corpus: &IssueDocCorpus, n: usize) -> Result<Self, LexiconError> {
        if n == 0 {
            return Err(LexiconError::ZeroOrder);
        }
        let mut per_issue: BTreeMap<Issue, (HashMap<String, usize>, usize)> = BTreeMap::new();
        let mut global: HashMap<String, usize> = HashMap::new();
        let mut total = 0;
        for doc in &corpus.docs {
            let grams = ngrams(&doc.tokens, n).map_err(|_| LexiconError::ZeroOrder)?;
            let slot = per_issue.entry(doc.issue).or_default();
            slot.1 += grams.len();
            total += grams.len();
            for g in grams {
                *global.entry(g.clone()).or_default() += 1;
                *slot.0.entry(g).or_default() += 1;
            }
        }
        Ok(NgramCounts {
            per_issue,
            global,
            total,
        })
    }

    /// Issues with at least one n-gram, in tie-break order.
    pub fn issues(&self) -> impl Iterator<Item = Issue> + '_ {
        self.per_issue
            .iter()
            .filter(|(_, (_, n))| *n > 0)
            .map(|(i, _)| *i)
    }

    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.global.keys().map(String::as_str).collect()
    }

    /// ln(P(w|i) / P(w)); negative infinity when `w` never occurs under `i`.
    pub fn pmi(&self, word: &str, issue: Issue) -> Result<f64, LexiconError> {
        let global = *self
            .global
            .get(word)
            .ok_or_else(|| LexiconError::UndefinedPmi(word.to_owned()))?;
        let (counts, issue_total) = self
            .per_issue
            .get(&issue)
            .filter(|(_, n)| *n > 0)
            .ok_or(LexiconError::IssueAbsent(issue))?;
        let in_issue = counts.get(word).copied().unwrap_or(0);
        if in_issue == 0 {
            return Ok(f64::NEG_INFINITY);
        }
        let p_w_given_i = in_issue as f64 / *issue_total as f64;
        let p_w = global as f64 / self.total as f64;
        Ok((p_w_given_i / p_w).ln())
    }
}

/// PMI of a unigram with an issue over `corpus`.
pub fn pmi(word: &str, issue: Issue, corpus: &IssueDocCorpus) -> Result<f64, LexiconError> {
    NgramCounts::new(corpus, 1)?.pmi(word, issue)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexEntry {
    pub issue: Issue,
    pub pmi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IssueLexicon {
    pub entries: BTreeMap<String, LexEntry>,
    pub threshold: f64,
}

impl IssueLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&LexEntry> {
        self.entries.get(word)
    }

    /// Serializes as `{word: {issue, pmi}}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("lexicon entries serialize")
    }

    /// Inverse of [`IssueLexicon::to_json`]. The threshold is not stored, so it
    /// is recovered as the smallest stored score (or the default when empty).
    pub fn from_json(raw: &str) -> Result<Self, LexiconError> {
        let entries: BTreeMap<String, LexEntry> = serde_json::from_str(raw)?;
        let threshold = entries
            .values()
            .map(|e| e.pmi)
            .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.min(p))))
            .unwrap_or(DEFAULT_THRESHOLD)
            .min(DEFAULT_THRESHOLD);
        Ok(IssueLexicon { entries, threshold })
    }

    /// Words per issue, for summaries.
    pub fn issue_sizes(&self) -> BTreeMap<Issue, usize> {
        let mut out = BTreeMap::new();
        for e in self.entries.values() {
            *out.entry(e.issue).or_default() += 1;
        }
        out
    }
}

/// Assigns each n-gram to its highest-PMI issue (ties go to the issue that
/// sorts first) and keeps those scoring at least `threshold`.
pub fn ngram_lexicon(
    corpus: &IssueDocCorpus,
    n: usize,
    threshold: f64,
) -> Result<BTreeMap<String, LexEntry>, LexiconError> {
    let counts = NgramCounts::new(corpus, n)?;
    if counts.total == 0 {
        return Err(LexiconError::EmptyCorpus);
    }
    let issues: Vec<Issue> = counts.issues().collect();
    let mut out = BTreeMap::new();
    for word in counts.vocabulary() {
        let mut best: Option<LexEntry> = None;
        for &issue in &issues {
            let score = counts.pmi(word, issue)?;
            if best.is_none_or(|b| score > b.pmi) {
                best = Some(LexEntry { issue, pmi: score });
            }
        }
        if let Some(entry) = best.filter(|b| b.pmi >= threshold) {
            out.insert(word.to_owned(), entry);
        }
    }
    Ok(out)
}

/// Unigram issue lexicon.
pub fn build_lexicon(corpus: &IssueDocCorpus, threshold: f64) -> Result<IssueLexicon, LexiconError> {
    if corpus.docs.is_empty() {
        return Err(LexiconError::EmptyCorpus);
    }
    Ok(IssueLexicon {
        entries: ngram_lexicon(corpus, 1, threshold)?,
        threshold,
    })
}

/// Count of unigrams, bigrams and trigrams per issue at `threshold`.
pub fn ngram_size_table(
    corpus: &IssueDocCorpus,
    threshold: f64,
) -> Result<BTreeMap<Issue, [usize; 3]>, LexiconError> {
    let mut table: BTreeMap<Issue, [usize; 3]> =
        corpus.issues().into_iter().map(|i| (i, [0; 3])).collect();
    for n in 1..=3 {
        for entry in ngram_lexicon(corpus, n, threshold)?.values() {
            table.entry(entry.issue).or_default()[n - 1] += 1;
        }
    }
    Ok(table)
}

/// Distinct lexicon words present in the ad, with their issues.
pub fn match_issues(ad_tokens: &TokenSeq, lex: &IssueLexicon) -> BTreeSet<(String, Issue)> {
    ad_tokens
        .iter()
        .filter_map(|t| lex.get(t).map(|e| (t.to_owned(), e.issue)))
        .collect()
}
