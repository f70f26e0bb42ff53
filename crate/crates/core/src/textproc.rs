//! Tokenization, n-gram extraction and frequency counting.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("cannot read stopword file {path}: {source}")]
    Stopwords {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Ordered lowercase tokens. Tokens are never empty and never contain whitespace.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Builds a sequence from raw tokens, dropping anything that would break
    /// the token invariants.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t| !t.is_empty() && !t.chars().any(char::is_whitespace))
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.iter().any(|t| t == token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

/// Lowercases, splits on Unicode whitespace and trims non-alphanumeric
/// characters from both ends of each token. Interior punctuation such as
/// apostrophes, hyphens or `&` survives.
pub fn tokenize(text: &str) -> TokenSeq {
    let lowered = text.to_lowercase();
    TokenSeq(
        lowered
            .split_whitespace()
            .map(|raw| raw.trim_matches(|c: char| !c.is_alphanumeric()))
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect(),
    )
}

/// Contiguous windows of `n` tokens joined by single spaces.
pub fn ngrams(seq: &TokenSeq, n: usize) -> Result<Vec<String>, TextError> {
    if n == 0 {
        return Err(TextError::ZeroOrder);
    }
    Ok(seq.0.windows(n).map(|w| w.join(" ")).collect())
}

/// Counts n-grams across `texts`, discarding those made up entirely of
/// stopwords, and returns the `k` most frequent (count descending, then
/// lexicographic).
pub fn top_k_ngrams(
    texts: &[TokenSeq],
    n: usize,
    k: usize,
    stopset: &BTreeSet<String>,
) -> Result<Vec<(String, usize)>, TextError> {
    if n == 0 {
        return Err(TextError::ZeroOrder);
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for seq in texts {
        for window in seq.0.windows(n) {
            if window.iter().all(|t| stopset.contains(t)) {
                continue;
            }
            *counts.entry(window.join(" ")).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "it's", "its", "itself",
    "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on",
    "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

/// Built-in English function-word list used for trigram display.
pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS.iter().map(|s| (*s).to_owned()).collect()
}

/// Reads a one-word-per-line stopword file. Blank lines and `#` comments are ignored.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>, TextError> {
    let raw = fs::read_to_string(path).map_err(|source| TextError::Stopwords {
        path: path.display().to_string(),
        source,
    })?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(words: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(words.iter().copied())
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Vote Joe Biden!"), seq(&["vote", "joe", "biden"]));
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("far-left, taxes&amnesty"),
            seq(&["far-left", "taxes&amnesty"])
        );
        assert_eq!(tokenize("  \"Don't\"  -- ... "), seq(&["don't"]));
    }

    #[test]
    fn ngram_examples() {
        let abc = seq(&["a", "b", "c"]);
        assert_eq!(ngrams(&abc, 2).unwrap(), vec!["a b", "b c"]);
        assert!(ngrams(&seq(&["a", "b"]), 3).unwrap().is_empty());
        assert!(matches!(ngrams(&abc, 0), Err(TextError::ZeroOrder)));
    }

    #[test]
    fn trigrams_of_ten_tokens_match_enumeration() {
        let words: Vec<String> = (0..10).map(|i| format!("w{}", (i * 7) % 4)).collect();
        let s = TokenSeq::from_tokens(words.clone());
        let mut expected = Vec::new();
        for i in 0..words.len() {
            if i + 3 <= words.len() {
                expected.push(format!("{} {} {}", words[i], words[i + 1], words[i + 2]));
            }
        }
        let got = ngrams(&s, 3).unwrap();
        assert_eq!(got.len(), 8);
        assert_eq!(got, expected);
    }

    #[test]
    fn top_k_counts() {
        let texts = vec![tokenize("a b a b")];
        let top = top_k_ngrams(&texts, 2, 1, &BTreeSet::new()).unwrap();
        assert_eq!(top, vec![("a b".to_owned(), 2)]);
        assert!(top_k_ngrams(&[], 3, 5, &BTreeSet::new()).unwrap().is_empty());
    }

    #[test]
    fn stop_filter_requires_every_token() {
        let texts = vec![tokenize("time is running out of the way")];
        let stop = default_stopwords();
        let top = top_k_ngrams(&texts, 3, usize::MAX, &stop).unwrap();
        let grams: Vec<&str> = top.iter().map(|(g, _)| g.as_str()).collect();
        assert!(grams.contains(&"time is running"));
        assert!(!grams.contains(&"out of the"));
    }

    #[test]
    fn stopword_file_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        std::fs::write(&path, "The\n\n# comment\nof\n").unwrap();
        let stop = load_stopwords(&path).unwrap();
        assert_eq!(stop.len(), 2);
        assert!(stop.contains("the"));
    }

    fn brute_counts(texts: &[TokenSeq], n: usize, stop: &BTreeSet<String>) -> Vec<(String, usize)> {
        let mut all: Vec<String> = Vec::new();
        for t in texts {
            let toks = t.tokens();
            let mut i = 0;
            while i + n <= toks.len() {
                let w = &toks[i..i + n];
                if !w.iter().all(|x| stop.contains(x)) {
                    all.push(w.join(" "));
                }
                i += 1;
            }
        }
        let mut uniq: Vec<String> = all.clone();
        uniq.sort();
        uniq.dedup();
        let mut out: Vec<(String, usize)> = uniq
            .into_iter()
            .map(|g| {
                let c = all.iter().filter(|x| **x == g).count();
                (g, c)
            })
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "[A-Za-z0-9 ,.!?'&\\-\u{e9}\u{c9}\t\n]{0,60}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.joined());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn top_k_matches_hash_count_oracle(
            docs in proptest::collection::vec(proptest::collection::vec(0usize..5, 0..12), 0..6),
            n in 1usize..4,
        ) {
            let vocab = ["the", "a", "vote", "tax", "mask"];
            let texts: Vec<TokenSeq> = docs
                .iter()
                .map(|d| TokenSeq::from_tokens(d.iter().map(|&i| vocab[i])))
                .collect();
            let stop: BTreeSet<String> = ["the", "a"].iter().map(|s| s.to_string()).collect();
            let got = top_k_ngrams(&texts, n, usize::MAX, &stop).unwrap();
            let expected = brute_counts(&texts, n, &stop);
            prop_assert_eq!(&got, &expected);
            let total: usize = got.iter().map(|(_, c)| c).sum();
            let occurrences: usize = expected.iter().map(|(_, c)| c).sum();
            prop_assert_eq!(total, occurrences);
        }
    }
}
