use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::EmbedError;

/// Frozen pretrained word vectors. Lookups of unknown words yield `None`,
/// which encoders treat as a zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    dim: usize,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl WordVectors {
    pub fn new(dim: usize, entries: Vec<(String, Vec<f64>)>) -> Result<Self, EmbedError> {
        let mut wv = WordVectors {
            dim,
            words: Vec::with_capacity(entries.len()),
            data: Vec::with_capacity(entries.len() * dim),
            index: HashMap::with_capacity(entries.len()),
        };
        for (word, v) in entries {
            if v.len() != dim {
                return Err(EmbedError::WordVectors(format!(
                    "`{word}` has {} values, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbedError::WordVectors(format!("`{word}` has a non-finite value")));
            }
            // First occurrence wins, like most text loaders.
            if wv.index.contains_key(&word) {
                continue;
            }
            wv.index.insert(word.clone(), wv.words.len());
            wv.words.push(word);
            wv.data.extend(v);
        }
        Ok(wv)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    /// Keeps only the given words, in sorted order.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> WordVectors {
        let entries = keep
            .iter()
            .filter_map(|w| self.get(w).map(|v| (w.clone(), v.to_vec())))
            .collect();
        WordVectors::new(self.dim, entries).expect("rows already validated")
    }

    /// Reads `token v1 .. vd` lines. A leading `count dim` header line is
    /// skipped; the dimension is fixed by the first vector line.
    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let file = File::open(path).map_err(|e| EmbedError::Io(format!("{}: {e}", path.display())))?;
        let mut dim = None;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| EmbedError::Io(e.to_string()))?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            let values = rest
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbedError::WordVectors(format!("line {}: {e}", i + 1)))?;
            let d = *dim.get_or_insert(values.len());
            if d == 0 || values.len() != d {
                return Err(EmbedError::WordVectors(format!(
                    "line {}: expected {d} values, found {}",
                    i + 1,
                    values.len()
                )));
            }
            entries.push((word.to_owned(), values));
        }
        let dim = dim.ok_or_else(|| EmbedError::WordVectors("no vectors in file".into()))?;
        WordVectors::new(dim, entries)
    }
}
