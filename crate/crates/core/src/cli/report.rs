//! Report envelope and per-quantity records. See `docs/report-schema.md`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::probability::RouteComparison;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "qprob";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantityLabel {
    CE,
    AP,
    CP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Mismatch,
    Error,
}

/// One computed quantity with both evaluation routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionedReport {
    pub quantity: QuantityLabel,
    /// What was measured when it is not implied by the system (e.g. `"x"`, `"n·a"`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given: Option<String>,
    pub value: Option<f64>,
    /// Definition route (conditional distribution).
    pub route_a: Option<f64>,
    /// Trace route (conditional density operator).
    pub route_b: Option<f64>,
    pub discrepancy: Option<f64>,
    pub tolerance: f64,
    pub verdict: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl ConditionedReport {
    /// `tolerance` is absolute; the verdict is `ok` iff the discrepancy is within it.
    pub fn from_routes(quantity: QuantityLabel, event: String, given: Option<String>, routes: RouteComparison, tolerance: f64) -> Self {
        // Adding 0.0 maps -0.0 to 0.0.
        let routes = RouteComparison { definition: routes.definition + 0.0, trace: routes.trace + 0.0 };
        let discrepancy = routes.discrepancy();
        Self {
            quantity,
            observable: None,
            event,
            given,
            value: Some(routes.definition),
            route_a: Some(routes.definition),
            route_b: Some(routes.trace),
            discrepancy: Some(discrepancy),
            tolerance,
            verdict: if discrepancy <= tolerance { Status::Ok } else { Status::Mismatch },
            error: None,
            timing_ms: None,
        }
    }

    /// A quantity with a single evaluation route.
    pub fn single(quantity: QuantityLabel, event: String, given: Option<String>, value: f64, tolerance: f64) -> Self {
        Self::from_routes(quantity, event, given, RouteComparison { definition: value, trace: value }, tolerance)
    }

    pub fn failed(quantity: QuantityLabel, event: String, given: Option<String>, error: String, tolerance: f64) -> Self {
        Self {
            quantity,
            observable: None,
            event,
            given,
            value: None,
            route_a: None,
            route_b: None,
            discrepancy: None,
            tolerance,
            verdict: Status::Error,
            error: Some(error),
            timing_ms: None,
        }
    }

    pub fn with_observable(mut self, observable: impl Into<String>) -> Self {
        self.observable = Some(observable.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    /// SHA-256 of the config file bytes, hex.
    pub config_hash: String,
    pub kind: String,
    pub seed: Option<u64>,
    pub tolerance_scale: f64,
    pub reports: Vec<ConditionedReport>,
    /// Kind-specific results (partition functions, time series, refinement studies).
    pub summary: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl Envelope {
    pub fn new(kind: &str, config_bytes: &[u8], seed: Option<u64>, tolerance_scale: f64) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash(config_bytes),
            kind: kind.into(),
            seed,
            tolerance_scale,
            reports: Vec::new(),
            summary: serde_json::Value::Null,
            timing_ms: None,
        }
    }

    pub fn all_ok(&self) -> bool {
        self.reports.iter().all(|r| r.verdict == Status::Ok)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per report.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["quantity", "observable", "event", "given", "value", "route_a", "route_b", "discrepancy", "tolerance", "verdict", "error"])
            .expect("in-memory write");
        for r in &self.reports {
            w.write_record([
                format!("{:?}", r.quantity),
                r.observable.clone().unwrap_or_default(),
                r.event.clone(),
                r.given.clone().unwrap_or_default(),
                opt(r.value),
                opt(r.route_a),
                opt(r.route_b),
                opt(r.discrepancy),
                num(r.tolerance),
                status_name(r.verdict).into(),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip form, with an exponent for very small or large values.
pub fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("f64 serializes")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Mismatch => "mismatch",
        Status::Error => "error",
    }
}

pub fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
