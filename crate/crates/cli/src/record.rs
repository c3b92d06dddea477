use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use segver::jets::{RankVerdict, Verdict};
use segver::Shape;

/// Bumped whenever a field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Query {
    OscDim,
    SecDim,
    Bound,
    Table,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Shape(Shape),
    Map(String),
    Suite(String),
    None,
}

/// One machine-readable answer. `inputs` and `results` are flat maps so that
/// new quantities can be added without a schema bump.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub schema_version: u32,
    pub query: Query,
    pub subject: Subject,
    pub inputs: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    pub verdict: String,
    pub prime: Option<u64>,
    pub seed: Option<u64>,
    pub trials: Option<u32>,
    pub wall_ms: u64,
}

impl VerdictRecord {
    pub fn new(query: Query, subject: Subject) -> Self {
        VerdictRecord {
            schema_version: SCHEMA_VERSION,
            query,
            subject,
            inputs: BTreeMap::new(),
            results: BTreeMap::new(),
            verdict: String::new(),
            prime: None,
            seed: None,
            trials: None,
            wall_ms: 0,
        }
    }

    pub fn input(mut self, key: &str, v: impl Serialize) -> Self {
        self.inputs.insert(key.into(), serde_json::to_value(v).expect("plain data"));
        self
    }

    pub fn result(mut self, key: &str, v: impl Serialize) -> Self {
        self.results.insert(key.into(), serde_json::to_value(v).expect("plain data"));
        self
    }

    pub fn verdict(mut self, v: impl Into<String>) -> Self {
        self.verdict = v.into();
        self
    }

    pub fn from_rank(shape: &Shape, r: &RankVerdict) -> Self {
        let mut rec = VerdictRecord::new(Query::SecDim, Subject::Shape(shape.clone()))
            .input("h", r.h)
            .result("cone_rank", r.cone_rank)
            .result("expected_cone_rank", r.expected_cone_rank)
            .result("projective_dim", r.projective_dim)
            .result("expected_dim", r.expected_cone_rank - 1)
            .verdict(r.verdict.as_str());
        rec.prime = Some(r.prime);
        rec.seed = Some(r.seed);
        rec.trials = Some(r.trials);
        rec
    }

    pub fn is_defect_suspected(&self) -> bool {
        self.verdict == Verdict::DefectSuspected.as_str()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let shape = Shape::new(&[2, 1], &[1, 3]).unwrap();
        let mut rec = VerdictRecord::new(Query::Bound, Subject::Shape(shape))
            .input("n1", 1)
            .result("h_main", "3")
            .verdict("ok");
        rec.wall_ms = 12;
        let text = serde_json::to_string(&rec).unwrap();
        assert!(text.starts_with("{\"schema_version\":1,\"query\":\"bound\""));
        let back: VerdictRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rec);
    }
}
