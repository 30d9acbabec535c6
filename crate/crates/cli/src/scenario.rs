//! Scenario files: a JSON document describing pipes, the leak, the
//! boundary head schedule and analysis options.
//!
//! Pipe numbers in scenario files are one-based.

use std::fs;
use std::path::{Path, PathBuf};

use leakscope_core::{HeadLoss, LeakFn, LeakSpec, PipeSet};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PipeEntry {
    #[serde(flatten)]
    pub loss: HeadLoss,
    #[serde(default)]
    pub length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakEntry {
    pub k: usize,
    pub x: f64,
    pub leak_fn: LeakFn,
}

/// Inclusive linear grid of `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Range {
    pub fn expand(&self) -> Vec<f64> {
        match self.steps {
            0 => vec![],
            1 => vec![self.from],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.to
                    } else {
                        self.from + (self.to - self.from) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }

    fn check(&self, path: &str, errors: &mut Vec<String>) {
        if !(self.from.is_finite() && self.to.is_finite()) {
            errors.push(format!("{path}: from and to must be finite"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Boundary {
    Pairs(Vec<(f64, f64)>),
    Range { h_in: Range, h_out: f64 },
}

impl Boundary {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        match self {
            Boundary::Pairs(p) => p.clone(),
            Boundary::Range { h_in, h_out } => {
                h_in.expand().into_iter().map(|h| (h, *h_out)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    pub eps_spread: Option<f64>,
    pub eps_fit: Option<f64>,
    pub nominal_dh: Option<f64>,
    pub nominal_h_out: Option<f64>,
    pub dh_grid: Option<Range>,
    pub h_y: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub pipes: Vec<PipeEntry>,
    pub leak: LeakEntry,
    pub boundary: Boundary,
    #[serde(default)]
    pub analysis: Analysis,
}

impl Scenario {
    pub fn from_json(text: &str, origin: &Path) -> Result<Scenario, CliError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let violations = scenario.violations();
        if violations.is_empty() {
            Ok(scenario)
        } else {
            Err(CliError::Invalid {
                path: origin.to_path_buf(),
                violations,
            })
        }
    }

    /// Every invariant violation, each prefixed by its field path.
    pub fn violations(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let n = self.pipes.len();
        if n == 0 {
            errors.push("pipes: at least one pipe is required".into());
        }
        for (i, p) in self.pipes.iter().enumerate() {
            if let Err(e) = p.loss.validate() {
                errors.push(format!("pipes[{i}]: {e}"));
            }
            if let Some(l) = p.length {
                if !(l.is_finite() && l > 0.0) {
                    errors.push(format!("pipes[{i}].length: must be positive, got {l}"));
                }
            }
        }
        let lengths = self.pipes.iter().filter(|p| p.length.is_some()).count();
        if lengths != 0 && lengths != n {
            errors.push("pipes: lengths must be given for every pipe or for none".into());
        }
        if self.leak.k < 1 || self.leak.k > n {
            errors.push(format!(
                "leak.k: must be between 1 and {n}, got {}",
                self.leak.k
            ));
        }
        if !(self.leak.x > 0.0 && self.leak.x < 1.0) {
            errors.push(format!("leak.x: must lie in (0, 1), got {}", self.leak.x));
        }
        if let Err(e) = self.leak.leak_fn.validate() {
            errors.push(format!("leak.leak_fn: {e}"));
        }
        match &self.boundary {
            Boundary::Pairs(pairs) => {
                for (i, (a, b)) in pairs.iter().enumerate() {
                    if !(a.is_finite() && b.is_finite()) {
                        errors.push(format!("boundary[{i}]: heads must be finite"));
                    }
                }
            }
            Boundary::Range { h_in, h_out } => {
                h_in.check("boundary.h_in", &mut errors);
                if !h_out.is_finite() {
                    errors.push("boundary.h_out: must be finite".into());
                }
            }
        }
        let a = &self.analysis;
        for (name, v) in [("eps_spread", a.eps_spread), ("eps_fit", a.eps_fit)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    errors.push(format!(
                        "analysis.{name}: must be finite and non-negative, got {v}"
                    ));
                }
            }
        }
        for (name, v) in [
            ("nominal_dh", a.nominal_dh),
            ("nominal_h_out", a.nominal_h_out),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    errors.push(format!("analysis.{name}: must be finite"));
                }
            }
        }
        if let Some(g) = &a.dh_grid {
            g.check("analysis.dh_grid", &mut errors);
        }
        if let Some(h_y) = &a.h_y {
            if h_y.len() != n {
                errors.push(format!(
                    "analysis.h_y: expected {n} entries, got {}",
                    h_y.len()
                ));
            }
            if h_y.iter().any(|h| !h.is_finite()) {
                errors.push("analysis.h_y: entries must be finite".into());
            }
        }
        errors
    }

    pub fn pipe_set(&self) -> Result<PipeSet, CliError> {
        let set = PipeSet::new(self.pipes.iter().map(|p| p.loss).collect())?;
        let lengths: Option<Vec<f64>> = self.pipes.iter().map(|p| p.length).collect();
        Ok(match lengths {
            Some(l) => set.with_lengths(l)?,
            None => set,
        })
    }

    /// The leak with a zero-based pipe index.
    pub fn leak_spec(&self) -> LeakSpec {
        LeakSpec::new(self.leak.k - 1, self.leak.x, self.leak.leak_fn)
    }

    pub fn boundary_pairs(&self) -> Vec<(f64, f64)> {
        self.boundary.pairs()
    }

    pub fn h_y(&self) -> Vec<f64> {
        self.analysis
            .h_y
            .clone()
            .unwrap_or_else(|| vec![0.0; self.pipes.len()])
    }
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, CliError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: PathBuf::from(path),
        source: e,
    })?;
    Scenario::from_json(&text, path)
}
