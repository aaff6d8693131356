//! Scenario-driven audit runner for Walker three-manifolds: loads a TOML
//! scenario, runs the requested checks and renders a deterministic report.

pub mod config;
pub mod report;
pub mod sampling;
pub mod suites;

use std::path::PathBuf;

pub use config::{ConfigError, Format, Scenario, Tolerances};
pub use report::Report;
pub use suites::{run, Command, RunError};

/// Command-line settings layered over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// `key=value` pairs for the tolerance table.
    pub tolerances: Vec<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

pub fn load(path: &std::path::Path, o: &Overrides) -> Result<Scenario, ConfigError> {
    let mut s = Scenario::load(path)?;
    let cli_err = |key: &str, message: String| ConfigError {
        file: "<command line>".into(),
        line: None,
        key: key.to_string(),
        message,
    };
    for pair in &o.tolerances {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| cli_err("--tol-override", format!("expected key=value, got {pair:?}")))?;
        let key = key.trim();
        let value: f64 = value.trim().parse().map_err(|e| cli_err("--tol-override", format!("{key}: {e}")))?;
        s.analysis.tolerances.set(key, value).map_err(|e| cli_err("--tol-override", format!("{key}: {e}")))?;
    }
    if let Some(seed) = o.seed {
        s.analysis.seed = seed;
    }
    if let Some(out) = &o.out {
        s.output.path = Some(out.clone());
    }
    if let Some(f) = o.format {
        s.output.format = f;
    }
    Ok(s)
}
