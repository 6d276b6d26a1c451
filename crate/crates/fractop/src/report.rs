//! Report envelope, spec digests and number formatting shared by the front end.

use num_rational::BigRational;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::ifs::IfsSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub spec_digest: Vec<String>,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Report {
    pub fn new(command: impl Into<String>, specs: &[&IfsSpec], results: serde_json::Value) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            spec_digest: specs.iter().map(|s| digest(s)).collect(),
            results,
            warnings: Vec::new(),
            timing_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// SHA-256 of the canonical JSON form of a spec.
pub fn digest(spec: &IfsSpec) -> String {
    let canon = serde_json::to_string(spec).expect("spec serializes");
    hex::encode(Sha256::digest(canon.as_bytes()))
}

/// Writes `inf` / `-inf` as strings since JSON has no infinities.
pub fn ser_f64_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

pub fn ser_opt_f64_inf<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_f64_inf(x, s),
        None => s.serialize_str("inf"),
    }
}

/// `p/q` form of a rational.
pub fn rational_string(q: &BigRational) -> String {
    if q.denom() == &1.into() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
