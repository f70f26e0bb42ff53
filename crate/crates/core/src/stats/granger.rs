use serde::{Deserialize, Serialize};

use super::hypothesis::{Df, TestResult};
use super::ols::{ols_fit, Design};
use super::special::f_sf;
use super::{StatsError, TimeSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LagOutcome {
    Tested {
        #[serde(flatten)]
        result: TestResult,
        rss_restricted: f64,
        rss_unrestricted: f64,
        observations: usize,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrangerLag {
    pub lag: usize,
    #[serde(flatten)]
    pub outcome: LagOutcome,
}

impl GrangerLag {
    pub fn result(&self) -> Option<&TestResult> {
        match &self.outcome {
            LagOutcome::Tested { result, .. } => Some(result),
            LagOutcome::Skipped { .. } => None,
        }
    }
}

/// Tests whether `x` Granger-causes `y` at every lag 1..=max_lag. The series
/// must cover the same days.
pub fn granger_test(
    x: &TimeSeries,
    y: &TimeSeries,
    max_lag: usize,
) -> Result<Vec<GrangerLag>, StatsError> {
    if x.start() != y.start() || x.len() != y.len() {
        return Err(StatsError::Misaligned);
    }
    granger_test_values(x.values(), y.values(), max_lag)
}

/// Same as [`granger_test`] on raw, already aligned values.
pub fn granger_test_values(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
) -> Result<Vec<GrangerLag>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if max_lag == 0 {
        return Err(StatsError::Shape);
    }
    Ok((1..=max_lag).map(|lag| single_lag(x, y, lag)).collect())
}

fn single_lag(x: &[f64], y: &[f64], lag: usize) -> GrangerLag {
    let skipped = |reason: String| GrangerLag {
        lag,
        outcome: LagOutcome::Skipped { reason },
    };
    let total = y.len();
    if total <= lag {
        return skipped(format!("series of length {total} too short for lag {lag}"));
    }
    let n = total - lag;
    let df_den = n as i64 - 2 * lag as i64 - 1;
    if df_den < 1 {
        return skipped(format!("{n} usable rows leave no residual degrees of freedom at lag {lag}"));
    }
    let target: Vec<f64> = y[lag..].to_vec();
    let mut restricted = Vec::with_capacity(n * (lag + 1));
    let mut unrestricted = Vec::with_capacity(n * (2 * lag + 1));
    for t in lag..total {
        restricted.push(1.0);
        unrestricted.push(1.0);
        for k in 1..=lag {
            restricted.push(y[t - k]);
            unrestricted.push(y[t - k]);
        }
        for k in 1..=lag {
            unrestricted.push(x[t - k]);
        }
    }
    let fit = |cols: usize, data: Vec<f64>| {
        Design::new(n, cols, data).and_then(|d| ols_fit(&target, &d))
    };
    let (r, u) = match (fit(lag + 1, restricted), fit(2 * lag + 1, unrestricted)) {
        (Ok(r), Ok(u)) => (r, u),
        (Err(e), _) | (_, Err(e)) => return skipped(e.to_string()),
    };
    let d1 = lag as f64;
    let d2 = df_den as f64;
    let f = if u.rss > 0.0 {
        ((r.rss - u.rss) / d1).max(0.0) / (u.rss / d2)
    } else {
        f64::INFINITY
    };
    let p = if f.is_finite() { f_sf(f, d1, d2).unwrap_or(f64::NAN) } else { 0.0 };
    GrangerLag {
        lag,
        outcome: LagOutcome::Tested {
            result: TestResult {
                statistic: f,
                df: Df::Two(d1, d2),
                p_value: p,
            },
            rss_restricted: r.rss,
            rss_unrestricted: u.rss,
            observations: n,
        },
    }
}
