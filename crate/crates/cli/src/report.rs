//! Check results and their text and JSONL renderings.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        CheckResult {
            name: name.into(),
            status,
            residual: None,
            tolerance: None,
            witness: None,
            detail: None,
            columns: Vec::new(),
            table: Vec::new(),
            elapsed_ms: None,
        }
    }

    /// Passes when `residual <= tolerance`.
    pub fn residual(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let mut c = CheckResult::new(name, Status::from_bool(residual <= tolerance));
        c.residual = Some(residual);
        c.tolerance = Some(tolerance);
        c
    }

    pub fn info(name: impl Into<String>) -> Self {
        CheckResult::new(name, Status::Info)
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// `columns[0]` heads the row labels, the rest head the values.
    pub fn with_table(mut self, columns: &[&str], rows: Vec<Row>) -> Self {
        self.columns = columns.iter().map(|c| c.to_string()).collect();
        self.table = rows;
        self
    }

    pub fn with_elapsed(mut self, elapsed: Duration) -> Self {
        self.elapsed_ms = Some(elapsed.as_secs_f64() * 1e3);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub command: String,
    pub passed: usize,
    pub failed: usize,
    pub verdict: Status,
}

/// Every check a command ran.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub checks: Vec<CheckResult>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        RunReport {
            command: command.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn summary(&self) -> Summary {
        let count = |s| self.checks.iter().filter(|c| c.status == s).count();
        Summary {
            command: self.command.clone(),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            verdict: Status::from_bool(self.passed()),
        }
    }

    /// Drops elapsed times so output is reproducible.
    pub fn strip_timings(&mut self) {
        for c in &mut self.checks {
            c.elapsed_ms = None;
        }
    }

    /// One JSON object per check, then the summary.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&serde_json::to_string(c).expect("serialisable"));
            out.push('\n');
        }
        let summary = serde_json::json!({ "summary": self.summary() });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = write!(out, "{}  {}", c.status.label(), c.name);
            if let Some(r) = c.residual {
                let _ = write!(out, "  residual={r:.3e}");
            }
            if let Some(t) = c.tolerance {
                let _ = write!(out, "  tol={t:.1e}");
            }
            if let Some(ms) = c.elapsed_ms {
                let _ = write!(out, "  ({ms:.1} ms)");
            }
            out.push('\n');
            if let Some(d) = &c.detail {
                let _ = writeln!(out, "      {d}");
            }
            if let Some(w) = &c.witness {
                let _ = writeln!(out, "      witness: {w}");
            }
            if !c.table.is_empty() {
                let head = c.columns.first().map_or("", String::as_str);
                let width = c.table.iter().map(|r| r.label.chars().count()).chain(Some(head.len())).max().unwrap_or(0);
                let _ = write!(out, "      {head:<width$}");
                for col in c.columns.iter().skip(1) {
                    let _ = write!(out, "  {col:>14}");
                }
                out.push('\n');
                for r in &c.table {
                    let _ = write!(out, "      {:<width$}", r.label);
                    for v in &r.values {
                        let _ = write!(out, "  {v:>14.10}");
                    }
                    out.push('\n');
                }
            }
        }
        let s = self.summary();
        let _ = writeln!(out, "{}: {} passed, {} failed", s.verdict.label(), s.passed, s.failed);
        out
    }
}
