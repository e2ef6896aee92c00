//! Per-residual comparison of two reports from the same config shape.

use std::fmt::Write as _;

use crate::error::CliError;
use crate::report::RunReport;

/// Magnitudes at or below this count as zero.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow {
    pub experiment: String,
    pub residual: String,
    pub a: f64,
    pub b: f64,
    /// `|a| / |b|` of the largest magnitudes; 1 when both vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportDiff {
    pub rows: Vec<DiffRow>,
    /// Residuals at zero in `a` and nonzero in `b`.
    pub newly_nonzero: Vec<DiffRow>,
    /// Residuals present in only one of the two reports, as `experiment.residual`.
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

pub fn diff(a: &RunReport, b: &RunReport) -> Result<ReportDiff, CliError> {
    let names = |r: &RunReport| r.experiments.iter().map(|e| e.name.clone()).collect::<Vec<_>>();
    let (na, nb) = (names(a), names(b));
    if na != nb {
        return Err(CliError::Diff(format!("mismatched experiment sets: {na:?} vs {nb:?}")));
    }
    let mut out = ReportDiff::default();
    for (ea, eb) in a.experiments.iter().zip(&b.experiments) {
        for ra in &ea.residuals {
            let Some(rb) = eb.residual(&ra.name) else {
                out.only_in_a.push(format!("{}.{}", ea.name, ra.name));
                continue;
            };
            let (ma, mb) = (ra.max_abs(), rb.max_abs());
            let ratio = if ma == mb { 1.0 } else if mb == 0.0 { f64::INFINITY } else { ma / mb };
            let row = DiffRow { experiment: ea.name.clone(), residual: ra.name.clone(), a: ma, b: mb, ratio };
            if ma <= ZERO_TOL && mb > ZERO_TOL {
                out.newly_nonzero.push(row.clone());
            }
            out.rows.push(row);
        }
        for rb in &eb.residuals {
            if ea.residual(&rb.name).is_none() {
                out.only_in_b.push(format!("{}.{}", eb.name, rb.name));
            }
        }
    }
    Ok(out)
}

impl ReportDiff {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<20} {:<28} {:>13} {:>13} {:>13}", "experiment", "residual", "a", "b", "ratio a/b");
        for r in &self.rows {
            let _ = writeln!(s, "{:<20} {:<28} {:>13.6e} {:>13.6e} {:>13}", r.experiment, r.residual, r.a, r.b, ratio_text(r.ratio));
        }
        if !self.newly_nonzero.is_empty() {
            let _ = writeln!(s, "\nnewly nonzero in b:");
            for r in &self.newly_nonzero {
                let _ = writeln!(s, "  {}.{}: {:.6e} -> {:.6e}", r.experiment, r.residual, r.a, r.b);
            }
        }
        for (label, list) in [("only in a", &self.only_in_a), ("only in b", &self.only_in_b)] {
            if !list.is_empty() {
                let _ = writeln!(s, "\n{label}:");
                for n in list {
                    let _ = writeln!(s, "  {n}");
                }
            }
        }
        s
    }
}

fn ratio_text(r: f64) -> String {
    if r.is_infinite() {
        "inf".into()
    } else if (1e-3..1e4).contains(&r) {
        format!("{r:.4}")
    } else {
        format!("{r:.4e}")
    }
}
