use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::StatsError;

/// Gap-free daily series. Dates are implied by `start` and the position in `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    start: NaiveDate,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Result<Self, StatsError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(TimeSeries { start, values })
    }

    /// Builds a daily series from sparse observations, carrying the last seen
    /// value forward across missing days. Later duplicates overwrite earlier ones.
    pub fn from_sparse_ffill(points: &[(NaiveDate, f64)]) -> Result<Self, StatsError> {
        let mut sorted = points.to_vec();
        sorted.sort_by_key(|p| p.0);
        let Some(&(start, _)) = sorted.first() else {
            return Err(StatsError::TooShort { needed: 1, got: 0 });
        };
        let end = sorted.last().map(|p| p.0).unwrap_or(start);
        let len = (end - start).num_days() as usize + 1;
        let mut values = vec![f64::NAN; len];
        for (d, v) in sorted {
            values[(d - start).num_days() as usize] = v;
        }
        let mut last = values[0];
        for v in values.iter_mut() {
            if v.is_nan() {
                *v = last;
            } else {
                last = *v;
            }
        }
        TimeSeries::new(start, values)
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> Option<NaiveDate> {
        self.date_at(self.values.len().checked_sub(1)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, i: usize) -> Option<NaiveDate> {
        self.start.checked_add_days(Days::new(i as u64))
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        let offset = (date - self.start).num_days();
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied()
    }

    pub fn points(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.start + Days::new(i as u64), v))
    }

    /// Restricts both series to their common date range.
    pub fn align(a: &TimeSeries, b: &TimeSeries) -> Option<(TimeSeries, TimeSeries)> {
        let start = a.start.max(b.start);
        let end = a.end()?.min(b.end()?);
        if end < start {
            return None;
        }
        let slice = |s: &TimeSeries| {
            let from = (start - s.start).num_days() as usize;
            let to = (end - s.start).num_days() as usize;
            TimeSeries {
                start,
                values: s.values[from..=to].to_vec(),
            }
        };
        Some((slice(a), slice(b)))
    }
}
