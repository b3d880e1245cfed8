//! Experiment report structure and serialization: a named table of rows plus
//! a four-state verdict, rendered to CSV (table only) or JSON (full record).
//!
//! Reports are deterministic: identical inputs produce byte-identical bodies.
//! The elapsed-time field is excluded from the body for that purpose.

use std::fmt;
use std::time::Instant;

/// Schema version stamped into every serialized report.
pub const SCHEMA_VERSION: &str = "1";

/// Four-state outcome of an experiment.  `Undecided` is a first-class
/// outcome: numerics that cannot certify an answer must not be folded into
/// `Fail`, and `Aborted` marks runs whose hypotheses could not be
/// established at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Undecided,
    Aborted,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Undecided => "undecided",
            Verdict::Aborted => "aborted",
        }
    }

    /// Folds row-level outcomes into an overall verdict: any `Fail` wins,
    /// then any `Undecided`, otherwise `Pass`.
    pub fn fold(outcomes: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in outcomes {
            match v {
                Verdict::Aborted => return Verdict::Aborted,
                Verdict::Fail => out = Verdict::Fail,
                Verdict::Undecided => {
                    if out == Verdict::Pass {
                        out = Verdict::Undecided;
                    }
                }
                Verdict::Pass => {}
            }
        }
        out
    }

    /// Classifies one absolute error against a tolerance: within → `Pass`,
    /// beyond five times the tolerance → `Fail`, the band between →
    /// `Undecided`.
    pub fn classify(abs_error: f64, tol: f64) -> Verdict {
        if !abs_error.is_finite() {
            Verdict::Fail
        } else if abs_error <= tol {
            Verdict::Pass
        } else if abs_error > 5.0 * tol {
            Verdict::Fail
        } else {
            Verdict::Undecided
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One table cell: a number or a text label.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

/// A finished experiment: command name, echoed configuration, one table of
/// named columns, a verdict, and the elapsed time.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub command: String,
    /// `(key, value)` pairs describing the exact configuration that ran,
    /// sorted by key before serialization.
    pub config: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub verdict: Verdict,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            config: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            verdict: Verdict::Undecided,
            runtime_ms: 0,
        }
    }

    /// Replaces the table with a single error row and marks the run aborted.
    pub fn abort(mut self, message: impl Into<String>) -> Self {
        self.columns = vec!["error".into()];
        self.rows = vec![vec![Cell::text(message)]];
        self.verdict = Verdict::Aborted;
        self
    }

    pub fn stamp_runtime(&mut self, started: Instant) {
        self.runtime_ms = started.elapsed().as_millis() as u64;
    }

    fn sorted_config(&self) -> Vec<(String, String)> {
        let mut cfg = self.config.clone();
        cfg.sort();
        cfg
    }

    /// CSV rendering of the table: a header line plus one line per row,
    /// RFC-style quoting, LF line endings, numbers at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            let line = row
                .iter()
                .map(|cell| match cell {
                    Cell::Num(v) => csv_field(&format_num(*v)),
                    Cell::Text(s) => csv_field(s),
                })
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    fn json_value(&self, include_runtime: bool) -> serde_json::Value {
        use serde_json::{json, Value};
        let config: serde_json::Map<String, Value> = self
            .sorted_config()
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|cell| match cell {
                            Cell::Num(v) if v.is_finite() => json!(v),
                            Cell::Num(v) => Value::String(format_num(*v)),
                            Cell::Text(s) => Value::String(s.clone()),
                        })
                        .collect(),
                )
            })
            .collect();
        let mut obj = serde_json::Map::new();
        obj.insert("schema_version".into(), Value::String(SCHEMA_VERSION.into()));
        obj.insert("command".into(), Value::String(self.command.clone()));
        obj.insert("config".into(), Value::Object(config));
        obj.insert("columns".into(), json!(self.columns));
        obj.insert("rows".into(), Value::Array(rows));
        obj.insert("verdict".into(), Value::String(self.verdict.name().into()));
        if include_runtime {
            obj.insert("runtime_ms".into(), json!(self.runtime_ms));
        }
        Value::Object(obj)
    }

    /// Full JSON rendering, including the elapsed time.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json_value(true))
            .expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    /// Deterministic body: the JSON record without the elapsed-time field.
    /// Two runs of the same configuration produce byte-identical bodies.
    pub fn body(&self) -> String {
        serde_json::to_string_pretty(&self.json_value(false))
            .expect("report serialization cannot fail")
    }

    /// Renders in the named format: `"csv"` or `"json"`.
    pub fn render(&self, format: &str) -> crate::Result<String> {
        match format {
            "csv" => Ok(self.to_csv()),
            "json" => Ok(self.to_json()),
            _ => Err(crate::Error::Config {
                what: format!("unknown output format `{format}` (expected csv or json)"),
            }),
        }
    }
}

/// Formats a number with 17 significant digits so that values round-trip.
fn format_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Quotes a CSV field when it contains a comma, quote, or line break.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
// Reference values are spelled at full precision on purpose.
#[allow(clippy::approx_constant, clippy::excessive_precision)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo");
        r.config = vec![("b".into(), "2".into()), ("a".into(), "1".into())];
        r.columns = vec!["x".into(), "label".into()];
        r.rows = vec![
            vec![Cell::Num(1.5), Cell::text("plain")],
            vec![Cell::Num(f64::INFINITY), Cell::text("needs,quoting")],
        ];
        r.verdict = Verdict::Pass;
        r.runtime_ms = 42;
        r
    }

    #[test]
    fn csv_uses_lf_quoting_and_17_digit_numbers() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], "x,label");
        assert_eq!(lines[1], "1.5000000000000000e0,plain");
        assert_eq!(lines[2], "inf,\"needs,quoting\"");
        assert_eq!(lines[3], "");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn empty_rows_render_as_header_only_csv() {
        let mut r = ExperimentReport::new("empty");
        r.columns = vec!["a".into(), "b".into()];
        assert_eq!(r.to_csv(), "a,b\n");
    }

    #[test]
    fn json_is_schema_stamped_and_body_excludes_runtime() {
        let r = sample();
        let json = r.to_json();
        assert!(json.contains("\"schema_version\": \"1\""));
        assert!(json.contains("\"runtime_ms\": 42"));
        let body = r.body();
        assert!(!body.contains("runtime_ms"));
        let mut again = sample();
        again.runtime_ms = 9000;
        assert_eq!(body, again.body());
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["config"]["a"], "1");
    }

    #[test]
    fn verdict_folding_never_masks_undecided_as_fail() {
        use Verdict::*;
        assert_eq!(Verdict::fold([Pass, Pass]), Pass);
        assert_eq!(Verdict::fold([Pass, Undecided]), Undecided);
        assert_eq!(Verdict::fold([Undecided, Fail]), Fail);
        assert_eq!(Verdict::fold([Pass, Aborted, Fail]), Aborted);
        assert_eq!(Verdict::fold([]), Pass);

        assert_eq!(Verdict::classify(0.5e-2, 1e-2), Pass);
        assert_eq!(Verdict::classify(2e-2, 1e-2), Undecided);
        assert_eq!(Verdict::classify(6e-2, 1e-2), Fail);
        assert_eq!(Verdict::classify(f64::NAN, 1e-2), Fail);
    }

    #[test]
    fn unknown_render_format_is_a_config_error() {
        let r = sample();
        assert!(matches!(r.render("yaml"), Err(crate::Error::Config { .. })));
        assert!(r.render("csv").is_ok());
        assert!(r.render("json").is_ok());
    }
}
