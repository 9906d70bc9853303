use std::fmt::Write as _;

use crate::config::Format;

/// One reported value, optionally checked against an expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub claim: String,
    pub expected: String,
    pub computed: String,
    pub tolerance: Option<f64>,
    /// `None` for informational values.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    records: Vec<Record>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            seed,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn value(&mut self, name: &str, claim: &str, computed: f64) {
        self.records.push(Record {
            name: name.into(),
            claim: claim.into(),
            expected: "-".into(),
            computed: format!("{computed:.12e}"),
            tolerance: None,
            pass: None,
        });
    }

    /// `|computed − expected| ≤ tol`.
    pub fn close(&mut self, name: &str, claim: &str, computed: f64, expected: f64, tol: f64) {
        self.push_check(name, claim, format!("{expected:.12e}"), computed, tol, (computed - expected).abs() <= tol);
    }

    /// `|computed| < tol`.
    pub fn below(&mut self, name: &str, claim: &str, computed: f64, tol: f64) {
        self.push_check(name, claim, format!("< {tol:e}"), computed, tol, computed.abs() < tol);
    }

    /// `computed > bound`.
    pub fn above(&mut self, name: &str, claim: &str, computed: f64, bound: f64) {
        self.push_check(name, claim, format!("> {bound:e}"), computed, bound, computed > bound);
    }

    pub fn flag(&mut self, name: &str, claim: &str, ok: bool, detail: &str) {
        self.records.push(Record {
            name: name.into(),
            claim: claim.into(),
            expected: "true".into(),
            computed: detail.into(),
            tolerance: None,
            pass: Some(ok),
        });
    }

    /// A check that could not be evaluated counts as failed.
    pub fn error(&mut self, name: &str, claim: &str, message: &str) {
        self.flag(name, claim, false, &format!("error: {message}"));
    }

    fn push_check(&mut self, name: &str, claim: &str, expected: String, computed: f64, tol: f64, pass: bool) {
        self.records.push(Record {
            name: name.into(),
            claim: claim.into(),
            expected,
            computed: format!("{computed:.6e}"),
            tolerance: Some(tol),
            pass: Some(pass && computed.is_finite()),
        });
    }

    pub fn checks(&self) -> usize {
        self.records.iter().filter(|r| r.pass.is_some()).count()
    }

    pub fn passed(&self) -> usize {
        self.records.iter().filter(|r| r.pass == Some(true)).count()
    }

    pub fn failed(&self) -> usize {
        self.checks() - self.passed()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Records => self.key_values(),
        }
    }

    fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ncgeom {} | {} | seed {}", env!("CARGO_PKG_VERSION"), self.command, self.seed);
        let width = self.records.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let _ = writeln!(out, "{:<6} {:<width$} {:>20} {:>22}  claim", "status", "name", "computed", "expected");
        for r in &self.records {
            let status = match r.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "",
            };
            let _ = writeln!(
                out,
                "{status:<6} {:<width$} {:>20} {:>22}  {}",
                r.name, r.computed, r.expected, r.claim
            );
        }
        let _ = writeln!(out, "{} checks: {} passed, {} failed", self.checks(), self.passed(), self.failed());
        out
    }

    fn key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "kind=env version={} command={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.seed
        );
        for r in &self.records {
            let status = match r.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "info",
            };
            let tol = r.tolerance.map_or("-".to_string(), |t| format!("{t:e}"));
            let _ = writeln!(
                out,
                "kind=record name={} status={status} computed={:?} expected={:?} tolerance={tol} claim={:?}",
                r.name, r.computed, r.expected, r.claim
            );
        }
        let _ = writeln!(
            out,
            "kind=summary checks={} passed={} failed={}",
            self.checks(),
            self.passed(),
            self.failed()
        );
        out
    }
}
