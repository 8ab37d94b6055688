//! Machine-readable report records emitted by the command-line interface.
//!
//! Every record is a flat struct of scalars so the JSON schema is the struct
//! itself and the CSV form is one header plus one row. Serialization is
//! deterministic: fixed field order for JSON, sorted keys for CSV.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct BellReport {
    pub d: usize,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    pub normalized_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub valid: bool,
    pub d: usize,
    pub alice_bases: usize,
    pub bob_bases: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZsetReport {
    pub d: usize,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_size: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_size_log2: Option<f64>,
    pub eta_exact_bound: f64,
    pub eta_paper_bound: f64,
    pub closes_loophole: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_agreement: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_closure_d: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LhvValueReport {
    pub d: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub d: usize,
    pub seed: u64,
    pub half_steps: usize,
    /// Heuristic lower bound on the best deterministic value.
    pub value: f64,
    /// d |Z| from the exact avoidance maximum. The gap to `value` is
    /// reported without any tightness claim.
    pub upper_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PopescuReport {
    pub d: usize,
    pub m: usize,
    pub eta: f64,
    pub strategies: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub eta: f64,
    pub feasible: bool,
    pub residual: f64,
    pub strategy_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_path: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaStarReport {
    pub eta_star: f64,
    pub tol: f64,
    pub no_violation: bool,
    pub lp_calls: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectionReport {
    pub eta: f64,
    pub trials: u64,
    pub mean_bits: f64,
    pub mean_iterations: f64,
    pub chi2_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GuessReport {
    pub bridge: &'static str,
    pub c_alice: usize,
    pub c_bob: usize,
    pub eta_alice: f64,
    pub eta_bob: f64,
    pub alice_click_rate: f64,
    pub bob_click_rate: f64,
    pub joint_click_rate: f64,
    pub joint_rate_deviation: f64,
    pub conditional_deviation: f64,
    pub marginal_deviation: f64,
}

/// One row of the threshold-curve table.
#[derive(Debug, Clone)]
pub struct CurveRow {
    pub d: usize,
    pub eta_paper_bound: f64,
    pub eta_witness_bound: Option<f64>,
    pub closes_loophole: bool,
}

pub const CURVE_CSV_HEADER: &str = "d,eta_paper_bound,eta_witness_bound,closes_loophole";

pub fn curve_to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let witness = row.eta_witness_bound.map(format_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.d,
            format_float(row.eta_paper_bound),
            witness,
            row.closes_loophole
        ));
    }
    out
}

fn format_float(v: f64) -> String {
    // ryu's shortest round-trip form, same as the JSON encoding.
    let mut buffer = ryu_format(v);
    if buffer.ends_with(".0") {
        buffer.truncate(buffer.len() - 2);
    }
    buffer
}

fn ryu_format(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}

/// JSON document (pretty, newline-terminated).
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One-record CSV document: header of sorted scalar keys, then one row.
pub fn to_csv<T: Serialize>(value: &T) -> Result<String> {
    let v: Value = serde_json::to_value(value)?;
    let obj = v
        .as_object()
        .ok_or_else(|| crate::error::Error::invalid("csv output needs a flat record"))?;
    let mut header = Vec::new();
    let mut row = Vec::new();
    for (key, val) in obj {
        header.push(key.clone());
        row.push(match val {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        });
    }
    Ok(format!("{}\n{}\n", header.join(","), row.join(",")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_one_header_one_row() {
        let r = LhvValueReport { d: 4, value: -80.0 };
        let csv = to_csv(&r).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, vec!["d,value", "4,-80.0"]);
    }

    #[test]
    fn json_field_order_is_stable() {
        let r = BellReport {
            d: 4,
            eta: 1.0,
            w: None,
            normalized_value: 1.0,
            raw_value: Some(16.0),
            samples: None,
            stderr: None,
            seed: None,
        };
        let a = to_json(&r).unwrap();
        let b = to_json(&r).unwrap();
        assert_eq!(a, b);
        let d_pos = a.find("\"d\"").unwrap();
        let norm_pos = a.find("\"normalized_value\"").unwrap();
        assert!(d_pos < norm_pos);
    }

    #[test]
    fn curve_rows_render_missing_witness_as_empty() {
        let rows = vec![CurveRow {
            d: 2048,
            eta_paper_bound: 0.3146,
            eta_witness_bound: None,
            closes_loophole: true,
        }];
        let csv = curve_to_csv(&rows);
        assert!(csv.starts_with(CURVE_CSV_HEADER));
        assert!(csv.contains("2048,0.3146,,true"));
    }
}
