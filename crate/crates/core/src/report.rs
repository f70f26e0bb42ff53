//! Run manifests and JSON report envelopes.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::stats::{Alternative, Df, StatsError, TestResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn json_digest<T: Serialize + ?Sized>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("value serializes"))
}

/// Provenance embedded in every report. `wall_time_ms` is the only field
/// that varies between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
    pub input_digests: BTreeMap<String, String>,
    pub wall_time_ms: u64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: None,
            config_digest: None,
            input_digests: BTreeMap::new(),
            wall_time_ms: 0,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn config<T: Serialize>(mut self, config: &T) -> Self {
        self.config_digest = Some(json_digest(config));
        self
    }

    /// Records an input under a role name such as `corpus`; paths are left
    /// out so relocating inputs does not change the report.
    pub fn input(mut self, role: &str, bytes: &[u8]) -> Self {
        self.input_digests.insert(role.to_owned(), sha256_hex(bytes));
        self
    }

    pub fn finish(mut self, started: Instant) -> Self {
        self.wall_time_ms = started.elapsed().as_millis() as u64;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// One statistical test in a report. Failed tests keep their name and
/// carry the reason instead of numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub test: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<Df>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub one_sided_p: Option<f64>,
    pub inputs_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TestRecord {
    pub fn new<I: Serialize + ?Sized>(test: impl Into<String>, inputs: &I, result: Result<TestResult, StatsError>) -> Self {
        let inputs_digest = json_digest(inputs);
        match result {
            Ok(r) => TestRecord {
                test: test.into(),
                statistic: Some(r.statistic),
                df: Some(r.df),
                p: Some(r.p_value),
                one_sided_p: None,
                inputs_digest,
                error: None,
            },
            Err(e) => TestRecord {
                test: test.into(),
                statistic: None,
                df: None,
                p: None,
                one_sided_p: None,
                inputs_digest,
                error: Some(e.to_string()),
            },
        }
    }

    /// Adds the one-sided p-value for `alt` when the test succeeded.
    pub fn with_one_sided(mut self, alt: Alternative) -> Self {
        if let (Some(statistic), Some(df), Some(p_value)) = (self.statistic, self.df, self.p) {
            self.one_sided_p = Some(TestResult { statistic, df, p_value }.one_sided(alt));
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn floats_round_trip_through_reports() {
        let vals: [f64; 5] = [0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, 5e-324, -2.2250738585072014e-308];
        let report = Report {
            manifest: RunManifest::new("t").seed(3),
            body: serde_json::json!({ "values": vals }),
        };
        let back: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        for (v, b) in vals.iter().zip(back["values"].as_array().unwrap()) {
            assert_eq!(v.to_bits(), b.as_f64().unwrap().to_bits());
        }
    }

    #[test]
    fn failed_test_keeps_reason() {
        let r = TestRecord::new("chi", &[[0.0]], Err(StatsError::ZeroMarginal));
        assert!(r.p.is_none());
        assert!(r.error.unwrap().contains("zero"));
        let ok = TestRecord::new("t", &[1.0], Ok(TestResult { statistic: 2.0, df: Df::One(4.0), p_value: 0.2 }))
            .with_one_sided(Alternative::Greater);
        assert_eq!(ok.one_sided_p, Some(0.1));
    }
}
