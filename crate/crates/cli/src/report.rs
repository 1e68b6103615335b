//! CSV tables and scalar diagnostics.

use std::fmt::Write as _;

/// Fixed 17-significant-digit scientific form, which round-trips every `f64`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name, including `.csv`.
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&'static str]) -> Self {
        Table { file: file.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Reported only.
    Info,
    /// Must hold; a violation fails the run.
    Invariant,
    /// Numerical tolerance; a miss is a warning unless the run is strict.
    Tolerance,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Info => "info",
            Kind::Invariant => "invariant",
            Kind::Tolerance => "tolerance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub analysis: &'static str,
    pub epsilon: Option<f64>,
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="` against `limit`.
    pub relation: &'static str,
    pub limit: Option<f64>,
    pub kind: Kind,
    pub passed: Option<bool>,
}

impl Diagnostic {
    pub fn info(analysis: &'static str, epsilon: Option<f64>, name: &str, value: f64) -> Self {
        Diagnostic { analysis, epsilon, name: name.into(), value, relation: "", limit: None, kind: Kind::Info, passed: None }
    }

    /// `value <= limit`.
    pub fn at_most(analysis: &'static str, epsilon: Option<f64>, name: &str, value: f64, limit: f64, kind: Kind) -> Self {
        Diagnostic {
            analysis,
            epsilon,
            name: name.into(),
            value,
            relation: "<=",
            limit: Some(limit),
            kind,
            passed: Some(value <= limit),
        }
    }

    /// `value >= limit`.
    pub fn at_least(analysis: &'static str, epsilon: Option<f64>, name: &str, value: f64, limit: f64, kind: Kind) -> Self {
        Diagnostic {
            analysis,
            epsilon,
            name: name.into(),
            value,
            relation: ">=",
            limit: Some(limit),
            kind,
            passed: Some(value >= limit),
        }
    }

    /// Checks with their own pass rule (such as a relative slack).
    pub fn with_outcome(mut self, passed: bool) -> Self {
        self.passed = Some(passed);
        self
    }

    pub fn failed(&self) -> bool {
        self.passed == Some(false)
    }

    pub fn describe(&self) -> String {
        let at = self.epsilon.map(|e| format!(" at epsilon {e}")).unwrap_or_default();
        match self.limit {
            Some(l) => format!("{}: {}{at} = {:e} (required {} {:e})", self.analysis, self.name, self.value, self.relation, l),
            None => format!("{}: {}{at} = {:e}", self.analysis, self.name, self.value),
        }
    }
}

pub const DIAGNOSTICS_HEADER: [&str; 8] = ["analysis", "epsilon", "name", "value", "relation", "limit", "kind", "passed"];

pub fn diagnostics_table(diags: &[Diagnostic]) -> Table {
    let mut t = Table::new("diagnostics.csv", &DIAGNOSTICS_HEADER);
    for d in diags {
        t.push(vec![
            d.analysis.into(),
            d.epsilon.map_or(Cell::Text(String::new()), Cell::Num),
            Cell::Text(d.name.clone()),
            d.value.into(),
            d.relation.into(),
            d.limit.map_or(Cell::Text(String::new()), Cell::Num),
            d.kind.as_str().into(),
            Cell::Text(d.passed.map_or(String::new(), |p| p.to_string())),
        ]);
    }
    t
}
