//! Run configuration: a TOML document with `[run]`, `[manifold]`, optional
//! per-experiment sections and `[tolerances.<experiment>]` tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use ocs_core::constructions::{BSVSpec, EllipticCurveSpec, MapKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const EXPERIMENTS: [(&str, &str); 5] = [
    ("verify_identities", "structure, torsion, defect and curvature identity residuals on the configured manifold"),
    ("degree_sweep", "torsion integral of twistor tori against sphere-map degree (bsv only)"),
    ("search", "Nijenhuis-energy descent from a seeded perturbation of a constant structure (flat_torus only)"),
    ("gauduchon_factor", "conformal factor making the (n-1)-defect vanish, with the post-solve identity residual"),
    ("bound_audit", "worst-case slack of the C1 bound, the torsion bound and G >= Gaud"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    FlatTorus,
    Bsv,
    ConformalKahler,
    S6,
    ScaledPair,
}

impl ManifoldKind {
    /// Kinds carried by a periodic grid.
    pub fn is_grid(self) -> bool {
        matches!(self, Self::FlatTorus | Self::Bsv | Self::ConformalKahler)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub experiments: Vec<String>,
    /// Values of `k` for defects and bounds; defaults to `1..n`.
    #[serde(default)]
    pub k: Option<Vec<usize>>,
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    pub kind: ManifoldKind,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub active_axes: Option<Vec<usize>>,
    /// Lattice generators as columns, written row by row.
    #[serde(default)]
    pub basis: Option<Vec<Vec<f64>>>,
    /// Seed of the orthogonal rotation applied to the standard structure.
    #[serde(default)]
    pub rotation_seed: Option<u64>,
    #[serde(default = "default_u_amplitude")]
    pub u_amplitude: f64,
    #[serde(default = "default_u_max_freq")]
    pub u_max_freq: i32,
    #[serde(default)]
    pub u_seed: Option<u64>,
    #[serde(default)]
    pub map_kind: Option<MapKind>,
    #[serde(default)]
    pub periods: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub truncation_radius: Option<usize>,
    #[serde(default)]
    pub pole_offset: Option<f64>,
    #[serde(default)]
    pub fiber_basis: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub e_basis: Option<Vec<Vec<f64>>>,
}

fn default_resolution() -> usize {
    32
}
fn default_u_amplitude() -> f64 {
    0.2
}
fn default_u_max_freq() -> i32 {
    2
}
fn default_points() -> usize {
    100
}
fn default_alpha() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_degrees")]
    pub degrees: Vec<u32>,
    #[serde(default)]
    pub resolutions: Option<Vec<usize>>,
}

fn default_degrees() -> Vec<u32> {
    vec![2, 3, 4]
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { degrees: default_degrees(), resolutions: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default = "default_perturbation_norm")]
    pub perturbation_norm: f64,
    #[serde(default = "default_perturbation_freq")]
    pub perturbation_max_freq: usize,
    #[serde(default)]
    pub basis_max_freq: Option<usize>,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_eps")]
    pub grad_eps: f64,
    #[serde(default = "default_search_tol")]
    pub tol: f64,
}

fn default_perturbation_norm() -> f64 {
    0.1
}
fn default_perturbation_freq() -> usize {
    1
}
fn default_step() -> f64 {
    1e-3
}
fn default_max_iters() -> usize {
    200
}
fn default_grad_eps() -> f64 {
    1e-7
}
fn default_search_tol() -> f64 {
    1e-14
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            resolution: None,
            perturbation_norm: default_perturbation_norm(),
            perturbation_max_freq: default_perturbation_freq(),
            basis_max_freq: None,
            step: default_step(),
            max_iters: default_max_iters(),
            grad_eps: default_grad_eps(),
            tol: default_search_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSection {
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub max_freq: Option<usize>,
    #[serde(default = "default_factor_iters")]
    pub max_iters: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_target_ratio")]
    pub target_ratio: f64,
}

fn default_factor_iters() -> usize {
    30
}
fn default_fd_step() -> f64 {
    1e-6
}
fn default_target_ratio() -> f64 {
    1e-10
}

impl Default for FactorSection {
    fn default() -> Self {
        Self {
            resolution: None,
            max_freq: None,
            max_iters: default_factor_iters(),
            fd_step: default_fd_step(),
            target_ratio: default_target_ratio(),
        }
    }
}

/// Statistic of a residual summary that a tolerance is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat {
    #[default]
    MaxAbs,
    Min,
    Max,
    Mean,
    Integral,
}

/// A bare number bounds `max_abs`; a table may give `lower`, `upper`, or a
/// `target` with `rel` or `abs` width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    MaxAbs(f64),
    Bounds(Bounds),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    #[serde(default)]
    pub stat: Stat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub manifold: ManifoldSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub factor: FactorSection,
    #[serde(default)]
    pub tolerances: BTreeMap<String, BTreeMap<String, Tolerance>>,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn config_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), message: message.into() }
}

fn matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(config_err(field, format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_resolution(field: &str, r: usize) -> Result<(), CliError> {
    if r < 8 || r % 2 != 0 {
        return Err(config_err(field, format!("resolution must be even and at least 8, got {r}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(r) = o.resolution {
            self.manifold.resolution = r;
        }
        if let Some(s) = o.seed {
            self.run.seed = s;
        }
        if let Some(out) = &o.out {
            self.run.out = Some(out.clone());
        }
    }

    /// Real dimension of the configured manifold.
    pub fn dim(&self) -> usize {
        6
    }

    pub fn k_values(&self) -> Vec<usize> {
        let n = self.dim() / 2;
        self.run.k.clone().unwrap_or_else(|| (1..n).collect())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.run.out.clone().unwrap_or_else(|| PathBuf::from("ocs-out").join(&self.run.name))
    }

    pub fn basis(&self) -> Result<DMatrix<f64>, CliError> {
        match &self.manifold.basis {
            Some(rows) => matrix("manifold.basis", rows, 6),
            None => Ok(DMatrix::identity(6, 6)),
        }
    }

    pub fn active_axes(&self) -> Vec<usize> {
        self.manifold.active_axes.clone().unwrap_or_else(|| vec![0, 1])
    }

    pub fn bsv_spec(&self, map_kind: MapKind, resolution: usize) -> Result<BSVSpec, CliError> {
        let m = &self.manifold;
        let mut curve = EllipticCurveSpec::default();
        if let Some(p) = m.periods {
            curve.periods = p;
        }
        if let Some(r) = m.truncation_radius {
            curve.truncation_radius = r;
        }
        if let Some(o) = m.pole_offset {
            curve.pole_offset = o;
        }
        let mut spec = BSVSpec::new(map_kind, resolution);
        spec.curve = curve;
        if let Some(rows) = &m.fiber_basis {
            spec.fiber_basis = matrix("manifold.fiber_basis", rows, 4)?;
        }
        spec.validate().map_err(|e| config_err("manifold", e.to_string()))?;
        Ok(spec)
    }

    pub fn e_basis(&self) -> Result<DMatrix<f64>, CliError> {
        match &self.manifold.e_basis {
            Some(rows) => matrix("manifold.e_basis", rows, 2),
            None => Ok(DMatrix::identity(2, 2)),
        }
    }

    pub fn f_basis(&self) -> Result<DMatrix<f64>, CliError> {
        match &self.manifold.fiber_basis {
            Some(rows) => matrix("manifold.fiber_basis", rows, 4),
            None => Ok(DMatrix::identity(4, 4)),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.manifold;
        if self.run.name.is_empty() || self.run.name.contains(['/', '\\']) {
            return Err(config_err("run.name", "must be a non-empty name without path separators"));
        }
        if self.run.experiments.is_empty() {
            return Err(config_err("run.experiments", "at least one experiment is required"));
        }
        let mut seen = Vec::new();
        for e in &self.run.experiments {
            if !EXPERIMENTS.iter().any(|(n, _)| n == e) {
                return Err(config_err("run.experiments", format!("unknown experiment '{e}'")));
            }
            if seen.contains(&e) {
                return Err(config_err("run.experiments", format!("experiment '{e}' listed twice")));
            }
            seen.push(e);
            let ok = match e.as_str() {
                "degree_sweep" => m.kind == ManifoldKind::Bsv,
                "search" => m.kind == ManifoldKind::FlatTorus,
                "gauduchon_factor" | "bound_audit" => m.kind.is_grid(),
                _ => true,
            };
            if !ok {
                return Err(config_err("run.experiments", format!("experiment '{e}' does not apply to {:?}", m.kind)));
            }
        }
        for key in self.tolerances.keys() {
            if !self.run.experiments.contains(key) {
                return Err(config_err(&format!("tolerances.{key}"), "no such experiment in run.experiments"));
            }
        }
        let n = self.dim() / 2;
        for &k in self.run.k.iter().flatten() {
            if k < 1 || k + 1 > n {
                return Err(config_err("run.k", format!("k must lie in 1..={}, got {k}", n - 1)));
            }
        }
        if m.kind.is_grid() {
            check_resolution("manifold.resolution", m.resolution)?;
        }
        let axes = self.active_axes();
        if axes.is_empty() || axes.iter().any(|&a| a >= 6) {
            return Err(config_err("manifold.active_axes", "axes must be non-empty and below 6"));
        }
        match m.kind {
            ManifoldKind::FlatTorus | ManifoldKind::ConformalKahler => {
                let b = self.basis()?;
                if b.determinant().abs() < 1e-12 {
                    return Err(config_err("manifold.basis", "basis is singular"));
                }
                if !(m.u_amplitude.is_finite() && m.u_amplitude >= 0.0) {
                    return Err(config_err("manifold.u_amplitude", "must be finite and non-negative"));
                }
                if m.u_max_freq < 1 {
                    return Err(config_err("manifold.u_max_freq", "must be at least 1"));
                }
            }
            ManifoldKind::Bsv => {
                let kind = m.map_kind.unwrap_or(MapKind::P);
                self.bsv_spec(kind, m.resolution)?;
            }
            ManifoldKind::S6 => {
                if m.points == 0 {
                    return Err(config_err("manifold.points", "must be positive"));
                }
            }
            ManifoldKind::ScaledPair => {
                if !(m.alpha > 0.0) || m.alpha == 1.0 {
                    return Err(config_err("manifold.alpha", "must be positive and different from 1"));
                }
                self.e_basis()?;
                self.f_basis()?;
            }
        }
        if self.run.experiments.iter().any(|e| e == "degree_sweep") {
            if self.sweep.degrees.is_empty() || self.sweep.degrees.iter().any(|&d| MapKind::from_degree(d).is_none()) {
                return Err(config_err("sweep.degrees", "degrees must be drawn from 2, 3, 4"));
            }
            for &r in self.sweep.resolutions.iter().flatten() {
                check_resolution("sweep.resolutions", r)?;
            }
        }
        if let Some(r) = self.search.resolution {
            check_resolution("search.resolution", r)?;
        }
        if let Some(r) = self.factor.resolution {
            check_resolution("factor.resolution", r)?;
        }
        if !(self.search.perturbation_norm > 0.0) {
            return Err(config_err("search.perturbation_norm", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[run]
name = "t"
experiments = ["verify_identities"]

[manifold]
kind = "flat_torus"
resolution = 8
"#;

    #[test]
    fn minimal_parses_and_validates() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.k_values(), vec![1, 2]);
    }

    #[test]
    fn odd_resolution_names_field() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.apply(&Overrides { resolution: Some(9), ..Default::default() });
        match c.validate() {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "manifold.resolution"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tolerance_forms() {
        let text = format!("{MINIMAL}\n[tolerances.verify_identities]\nnijenhuis = 1e-9\nc1_slack = {{ stat = \"min\", lower = -1e-8 }}\n");
        let c = RunConfig::parse(&text).unwrap();
        let t = &c.tolerances["verify_identities"];
        assert_eq!(t["nijenhuis"], Tolerance::MaxAbs(1e-9));
        assert!(matches!(t["c1_slack"], Tolerance::Bounds(Bounds { stat: Stat::Min, lower: Some(_), .. })));
    }

    #[test]
    fn unknown_experiment_rejected() {
        let c = RunConfig::parse(&MINIMAL.replace("verify_identities", "nope")).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config { .. })));
    }
}
