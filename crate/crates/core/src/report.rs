//! Versioned JSON report emitted by the verification suites.

use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "k1lab/1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub p: u64,
    pub f: usize,
    pub n: u32,
    pub r: usize,
    pub d: u32,
    pub d_t: u32,
    pub samples: usize,
    pub sparsity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    /// which subgroup / pair / sample the verdict refers to
    pub subject: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl CheckRecord {
    pub fn pass(name: impl Into<String>, subject: impl Into<String>) -> CheckRecord {
        CheckRecord { name: name.into(), subject: subject.into(), pass: true, witness: None }
    }

    pub fn fail(
        name: impl Into<String>,
        subject: impl Into<String>,
        witness: serde_json::Value,
    ) -> CheckRecord {
        CheckRecord { name: name.into(), subject: subject.into(), pass: false, witness: Some(witness) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub schema: String,
    pub group: String,
    pub config: ConfigEcho,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub timing_ms: u128,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let r = Report {
            schema: SCHEMA.into(),
            group: "heis27".into(),
            config: ConfigEcho { p: 3, f: 1, n: 4, r: 1, d: 3, d_t: 3, samples: 5, sparsity: 4 },
            seed: 42,
            checks: vec![
                CheckRecord::pass("c1", "P=2,P'=5"),
                CheckRecord::fail("c3", "P=1,P'=4", serde_json::json!({"diff": [1, 2]})),
            ],
            timing_ms: 12,
        };
        let s = serde_json::to_string_pretty(&r).unwrap();
        let back: Report = serde_json::from_str(&s).unwrap();
        assert_eq!(r, back);
        let s2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(s, s2, "serialize -> parse -> serialize must be the identity");
        assert!(!r.all_pass());
    }
}
