use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::special::{chi2_sf, t_two_sided_p};
use super::StatsError;

/// Degrees of freedom: a single value or a numerator/denominator pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Df {
    One(f64),
    Two(f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Df,
    pub p_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    Greater,
    Less,
}

impl TestResult {
    /// One-sided p-value from a two-sided result: half the two-sided p when
    /// the statistic points the way of the alternative, one minus that otherwise.
    pub fn one_sided(&self, alt: Alternative) -> f64 {
        let agrees = match alt {
            Alternative::Greater => self.statistic > 0.0,
            Alternative::Less => self.statistic < 0.0,
        };
        if agrees {
            self.p_value / 2.0
        } else {
            1.0 - self.p_value / 2.0
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-way table of nonnegative counts with row and column labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<f64>>,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        if counts.len() != row_labels.len()
            || counts.iter().any(|r| r.len() != col_labels.len())
        {
            return Err(StatsError::Shape);
        }
        if counts.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(StatsError::NonFinite);
        }
        Ok(ContingencyTable {
            row_labels,
            col_labels,
            counts,
        })
    }

    /// Unlabeled table; rows and columns get their indices as labels.
    pub fn from_counts(counts: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        ContingencyTable::new(
            (0..rows).map(|i| i.to_string()).collect(),
            (0..cols).map(|j| j.to_string()).collect(),
            counts,
        )
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let cols = self.col_labels.len();
        (0..cols)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Copy without all-zero rows and columns.
    pub fn drop_empty(&self) -> ContingencyTable {
        let rows: Vec<usize> = self
            .row_sums()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 0.0)
            .map(|(i, _)| i)
            .collect();
        let cols: Vec<usize> = self
            .col_sums()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 0.0)
            .map(|(j, _)| j)
            .collect();
        ContingencyTable {
            row_labels: rows.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: cols.iter().map(|&j| self.col_labels[j].clone()).collect(),
            counts: rows
                .iter()
                .map(|&i| cols.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
        }
    }
}

/// Pearson chi-square test of independence.
pub fn chi_square_test(table: &ContingencyTable) -> Result<TestResult, StatsError> {
    let r = table.row_labels.len();
    let c = table.col_labels.len();
    if r < 2 || c < 2 {
        return Err(StatsError::Shape);
    }
    let rows = table.row_sums();
    let cols = table.col_sums();
    if rows.iter().chain(&cols).any(|s| *s <= 0.0) {
        return Err(StatsError::ZeroMarginal);
    }
    let total: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = rows[i] * cols[j] / total;
            stat += (observed - expected).powi(2) / expected;
        }
    }
    let df = ((r - 1) * (c - 1)) as f64;
    Ok(TestResult {
        statistic: stat,
        df: Df::One(df),
        p_value: chi2_sf(stat, df)?,
    })
}

/// Chi-square goodness of fit of observed counts against category probabilities.
pub fn chi_square_gof(observed: &[f64], probs: &[f64]) -> Result<TestResult, StatsError> {
    if observed.len() != probs.len() {
        return Err(StatsError::LengthMismatch(observed.len(), probs.len()));
    }
    if observed.len() < 2 {
        return Err(StatsError::Shape);
    }
    let n: f64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n * p;
        if e <= 0.0 {
            return Err(StatsError::ZeroMarginal);
        }
        stat += (o - e).powi(2) / e;
    }
    let df = (observed.len() - 1) as f64;
    Ok(TestResult {
        statistic: stat,
        df: Df::One(df),
        p_value: chi2_sf(stat, df)?,
    })
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Welch's unequal-variance two-sample t-test, two-sided.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooShort {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (va, vb) = (sample_variance(a), sample_variance(b));
    if va == 0.0 && vb == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let t = (mean(a) - mean(b)) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TestResult {
        statistic: t,
        df: Df::One(df),
        p_value: t_two_sided_p(t, df)?,
    })
}

/// Cohen's kappa for two annotators labeling the same items.
pub fn cohens_kappa<T: Ord>(u: &[T], v: &[T]) -> Result<f64, StatsError> {
    if u.len() != v.len() {
        return Err(StatsError::LengthMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(StatsError::TooShort { needed: 1, got: 0 });
    }
    let n = u.len() as f64;
    let agree = u.iter().zip(v).filter(|(a, b)| a == b).count() as f64;
    let mut mu: BTreeMap<&T, f64> = BTreeMap::new();
    let mut mv: BTreeMap<&T, f64> = BTreeMap::new();
    for (a, b) in u.iter().zip(v) {
        *mu.entry(a).or_default() += 1.0;
        *mv.entry(b).or_default() += 1.0;
    }
    let p_o = agree / n;
    let p_e: f64 = mu
        .iter()
        .map(|(label, cu)| cu / n * mv.get(label).copied().unwrap_or(0.0) / n)
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(StatsError::UndefinedKappa);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
