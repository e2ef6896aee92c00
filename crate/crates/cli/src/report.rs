//! JSON run reports and CSV tables.

use std::collections::BTreeMap;
use std::path::Path;

use ocs_core::gridcalc::{integrate_dv, TensorField};
use serde::{Deserialize, Serialize};

use crate::config::{Bounds, RunConfig, Stat, Tolerance};
use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "ocs-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `∫ r dV` for field residuals; absent for scalar diagnostics.
    pub integral: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<Tolerance>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pass: Option<bool>,
}

impl ResidualSummary {
    pub fn scalar(name: &str, v: f64) -> Self {
        Self { name: name.to_string(), min: v, max: v, mean: v, integral: None, tolerance: None, pass: None }
    }

    pub fn from_values(name: &str, values: &[f64]) -> Self {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let mean = if values.is_empty() { f64::NAN } else { sum / values.len() as f64 };
        Self { name: name.to_string(), min: lo, max: hi, mean, integral: None, tolerance: None, pass: None }
    }

    /// Summary of a scalar field; `integral` is taken against the volume form of `g`.
    pub fn field(name: &str, f: &TensorField, g: &TensorField) -> Result<Self, CliError> {
        let mut s = Self::from_values(name, f.values());
        s.integral = Some(integrate_dv(f, g)?);
        Ok(s)
    }

    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }

    pub fn stat(&self, stat: Stat) -> f64 {
        match stat {
            Stat::MaxAbs => self.max_abs(),
            Stat::Min => self.min,
            Stat::Max => self.max,
            Stat::Mean => self.mean,
            Stat::Integral => self.integral.unwrap_or(self.mean),
        }
    }

    pub fn check(&mut self, tol: Tolerance) {
        let ok = match tol {
            Tolerance::MaxAbs(t) => self.max_abs() <= t,
            Tolerance::Bounds(b) => bounds_hold(self.stat(b.stat), &b),
        };
        self.tolerance = Some(tol);
        self.pass = Some(ok);
    }
}

fn bounds_hold(v: f64, b: &Bounds) -> bool {
    if !v.is_finite() {
        return false;
    }
    let mut ok = true;
    if let Some(l) = b.lower {
        ok &= v >= l;
    }
    if let Some(u) = b.upper {
        ok &= v <= u;
    }
    if let Some(t) = b.target {
        if let Some(r) = b.rel {
            ok &= (v - t).abs() <= r * t.abs();
        }
        if let Some(a) = b.abs {
            ok &= (v - t).abs() <= a;
        }
    }
    ok
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub resolution: Option<usize>,
    pub residuals: Vec<ResidualSummary>,
    /// CSV files written next to the report.
    pub tables: Vec<String>,
    /// Tolerance keys that matched no residual.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched_tolerances: Vec<String>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn residual(&self, name: &str) -> Option<&ResidualSummary> {
        self.residuals.iter().find(|r| r.name == name)
    }

    /// Applies configured tolerances; residuals without one carry no verdict.
    pub fn apply_tolerances(&mut self, tols: Option<&BTreeMap<String, Tolerance>>) {
        self.unmatched_tolerances.clear();
        if let Some(tols) = tols {
            for (key, tol) in tols {
                match self.residuals.iter_mut().find(|r| &r.name == key) {
                    Some(r) => r.check(*tol),
                    None => self.unmatched_tolerances.push(key.clone()),
                }
            }
        }
        self.pass = self.unmatched_tolerances.is_empty() && self.residuals.iter().all(|r| r.pass != Some(false));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: RunConfig,
    pub config_path: Option<String>,
    pub code_version: String,
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub provenance: Provenance,
    pub experiments: Vec<ExperimentReport>,
    pub pass: bool,
}

impl RunReport {
    pub fn experiment(&self, name: &str) -> Option<&ExperimentReport> {
        self.experiments.iter().find(|e| e.name == name)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Diff(format!("cannot read {}: {e}", path.display())))?;
        let r: Self = serde_json::from_str(&text).map_err(|e| CliError::Diff(format!("{}: {e}", path.display())))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(CliError::Diff(format!("{}: unsupported schema {}", path.display(), r.schema_version)));
        }
        Ok(r)
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(dir.join(self.file_name()))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Residual summaries as a table.
pub fn residual_table(name: &str, residuals: &[ResidualSummary]) -> Table {
    let mut t = Table::new(name, &["residual", "min", "max", "mean", "integral"]);
    for r in residuals {
        t.push(vec![
            r.name.clone(),
            fmt(r.min),
            fmt(r.max),
            fmt(r.mean),
            r.integral.map(fmt).unwrap_or_default(),
        ]);
    }
    t
}

pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}
