use std::fmt::Write as _;

use hill::coeffs::PeriodicCoefficients;
use hill::propagate::{INTEGRATION_ATOL, INTEGRATION_RTOL};
use hill::spectrum::{DEGENERACY_RTOL, EDGE_SNAP};
use hill::truncated::{EDGE_MULTIPLIER_TOL, ENDPOINT_TOL};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let fields: Vec<&str> = fields.iter().map(AsRef::as_ref).collect();
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub integration_rtol: f64,
    pub integration_atol: f64,
    pub degeneracy_rtol: f64,
    pub edge_snap: f64,
    pub edge_multiplier_tol: f64,
    pub endpoint_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            integration_rtol: INTEGRATION_RTOL,
            integration_atol: INTEGRATION_ATOL,
            degeneracy_rtol: DEGENERACY_RTOL,
            edge_snap: EDGE_SNAP,
            edge_multiplier_tol: EDGE_MULTIPLIER_TOL,
            endpoint_tol: ENDPOINT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical JSON form of `{period, model}`.
    pub model_hash: String,
    pub period: f64,
    pub model: hill::coeffs::Model,
    pub parameters: Value,
    pub tolerances: Tolerances,
}

pub fn model_hash(coeffs: &PeriodicCoefficients) -> String {
    let canonical = serde_json::json!({ "period": coeffs.period(), "model": coeffs.model() });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Meta {
    pub fn new(command: &str, coeffs: &PeriodicCoefficients, parameters: Value) -> Self {
        Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            model_hash: model_hash(coeffs),
            period: coeffs.period(),
            model: coeffs.model().clone(),
            parameters,
            tolerances: Tolerances::default(),
        }
    }
}

/// Output of one subcommand.
pub struct Artifact {
    pub csv: String,
    pub json: Value,
    pub summary: String,
    /// Set by `oracle-check` when the comparison fails.
    pub oracle_failed: bool,
}

impl Artifact {
    pub fn new(csv: Csv, meta: Meta, body: Value, summary: String) -> Self {
        let mut json = serde_json::json!({ "meta": meta });
        if let (Value::Object(dst), Value::Object(src)) = (&mut json, body) {
            dst.extend(src);
        }
        Artifact {
            csv: csv.finish(),
            json,
            summary,
            oracle_failed: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [std::f64::consts::PI, -1.0 / 3.0, 1e-300, 2.0, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn hash_depends_on_model_only() {
        let a = PeriodicCoefficients::kronig_penney(1.0, 10.0, 0.5).unwrap();
        let b = PeriodicCoefficients::kronig_penney(1.0, 10.0, 0.5).unwrap();
        let c = PeriodicCoefficients::kronig_penney(1.0, 10.0, 0.25).unwrap();
        assert_eq!(model_hash(&a), model_hash(&b));
        assert_ne!(model_hash(&a), model_hash(&c));
        assert_eq!(model_hash(&a).len(), 64);
    }
}
