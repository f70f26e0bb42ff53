use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::hypothesis::pearson;
use super::StatsError;
use crate::labels::Stance;
use crate::textproc::TokenSeq;

/// Trigram-by-stance Pearson matrix. `None` marks an undefined entry
/// (a constant vector on either side).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<Stance>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, row: usize, stance: Stance) -> Option<f64> {
        let c = self.cols.iter().position(|s| *s == stance)?;
        self.values[row][c]
    }
}

/// Correlates each trigram's encoding with the mean encoding of every stance
/// group, pairing the vectors coordinate by coordinate.
pub fn trigram_stance_correlation<F>(
    trigrams: &[TokenSeq],
    groups: &BTreeMap<Stance, Vec<TokenSeq>>,
    encode: F,
) -> Result<CorrelationMatrix, StatsError>
where
    F: Fn(&TokenSeq) -> Vec<f64>,
{
    let mut cols = Vec::new();
    let mut means = Vec::new();
    for (stance, ads) in groups {
        if ads.is_empty() {
            return Err(StatsError::EmptyGroup(stance.to_string()));
        }
        let mut mean: Vec<f64> = Vec::new();
        for ad in ads {
            let v = encode(ad);
            if mean.is_empty() {
                mean = vec![0.0; v.len()];
            }
            if v.len() != mean.len() {
                return Err(StatsError::Shape);
            }
            for (m, x) in mean.iter_mut().zip(&v) {
                *m += x;
            }
        }
        let n = ads.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        cols.push(*stance);
        means.push(mean);
    }
    let mut rows = Vec::with_capacity(trigrams.len());
    let mut values = Vec::with_capacity(trigrams.len());
    for tri in trigrams {
        let v = encode(tri);
        let mut row = Vec::with_capacity(means.len());
        for mean in &means {
            row.push(match pearson(&v, mean) {
                Ok(r) => Some(r),
                Err(StatsError::ConstantInput) => None,
                Err(e) => return Err(e),
            });
        }
        rows.push(tri.joined());
        values.push(row);
    }
    Ok(CorrelationMatrix { rows, cols, values })
}
