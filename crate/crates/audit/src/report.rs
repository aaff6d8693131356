//! Report model and writers. Key order is fixed by field order, so two runs
//! with the same inputs produce identical bytes.

use std::fmt::Display;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use walker_core::grid::Param;
use walker_core::surface::{PointStatus, UmbilicRecord};
use walker_core::Point;

use crate::config::{Format, Scenario};

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Note {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    pub notes: Vec<Note>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Section { name: name.to_string(), passed: true, checks: Vec::new(), notes: Vec::new() }
    }

    /// `value ≤ tol`; NaN fails. The witness is kept only on failure.
    pub fn at_most(&mut self, name: &str, value: f64, tol: f64, witness: Option<String>) -> bool {
        let passed = value <= tol;
        self.push(CheckLine {
            name: name.to_string(),
            passed,
            value,
            tolerance: Some(tol),
            witness: if passed { None } else { witness },
        });
        passed
    }

    /// A check that is decided by the caller.
    pub fn verdict(&mut self, name: &str, passed: bool, value: f64, tol: Option<f64>, witness: Option<String>) {
        self.push(CheckLine {
            name: name.to_string(),
            passed,
            value,
            tolerance: tol,
            witness: if passed { None } else { witness },
        });
    }

    pub fn failure(&mut self, name: &str, message: impl Display) {
        self.push(CheckLine {
            name: name.to_string(),
            passed: false,
            value: f64::NAN,
            tolerance: None,
            witness: Some(message.to_string()),
        });
    }

    pub fn note(&mut self, key: &str, value: impl Display) {
        self.notes.push(Note { key: key.to_string(), value: value.to_string() });
    }

    fn push(&mut self, c: CheckLine) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckLine> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// One row of `points.csv`. Numeric fields are empty on degenerate rows.
#[derive(Debug, Clone, Serialize)]
pub struct PointRow {
    pub u: f64,
    pub v: f64,
    pub t: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub v1: Option<f64>,
    pub v2: Option<f64>,
    pub v3: Option<f64>,
    pub fx: Option<f64>,
    pub fxx: Option<f64>,
    pub fxxx: Option<f64>,
    pub obstruction: Option<f64>,
    pub bracket_first: Option<f64>,
    pub bracket_second: Option<f64>,
    pub status: String,
}

impl From<&UmbilicRecord> for PointRow {
    fn from(r: &UmbilicRecord) -> Self {
        let d = r.data();
        let j = r.jets;
        PointRow {
            u: r.param.u,
            v: r.param.v,
            t: r.point.map(|p| p.t),
            x: r.point.map(|p| p.x),
            y: r.point.map(|p| p.y),
            lambda: d.map(|d| d.lambda),
            rho: d.map(|d| d.rho),
            v1: d.map(|d| d.v[0]),
            v2: d.map(|d| d.v[1]),
            v3: d.map(|d| d.v[2]),
            fx: j.map(|j| j.fx),
            fxx: j.map(|j| j.fxx),
            fxxx: j.map(|j| j.fxxx),
            obstruction: d.map(|d| d.obstruction),
            bracket_first: d.map(|d| d.bracket_first),
            bracket_second: d.map(|d| d.bracket_second),
            status: match &r.status {
                PointStatus::Regular(_) => "regular".into(),
                PointStatus::Degenerate(e) => format!("degenerate: {e}"),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub passed: bool,
    pub scenario: Scenario,
    pub sections: Vec<Section>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<PointRow>>,
}

impl Report {
    pub fn new(subcommand: &str, scenario: &Scenario, sections: Vec<Section>, points: Option<Vec<PointRow>>) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed: scenario.analysis.seed,
            passed: sections.iter().all(|s| s.passed),
            scenario: scenario.clone(),
            sections,
            points,
        }
    }

    /// Text is TOML without the per-point table (that goes to CSV);
    /// structured is JSON with everything.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Text => {
                let slim = Report { points: None, ..self.clone() };
                toml::to_string(&slim).expect("report serializes")
            }
        }
    }

    pub fn file_name(format: Format) -> &'static str {
        match format {
            Format::Text => "report.toml",
            Format::Structured => "report.json",
        }
    }

    /// Writes the report and, when present, `points.csv` into `dir`.
    pub fn write(&self, dir: &Path, format: Format) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join(Self::file_name(format));
        std::fs::write(&path, self.render(format))?;
        written.push(path);
        if let Some(rows) = &self.points {
            let path = dir.join("points.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn fmt_param(q: Param) -> String {
    format!("(u, v) = ({}, {})", q.u, q.v)
}

pub fn fmt_point(p: Point) -> String {
    format!("(t, x, y) = ({}, {}, {})", p.t, p.x, p.y)
}

/// Largest value and where it occurs; NaN counts as largest.
pub fn worst<T: Copy>(items: impl IntoIterator<Item = (T, f64)>) -> (f64, Option<T>) {
    let mut best = (0.0, None);
    for (at, v) in items {
        if v.is_nan() {
            return (f64::NAN, Some(at));
        }
        if best.1.is_none() || v > best.0 {
            best = (v, Some(at));
        }
    }
    best
}
