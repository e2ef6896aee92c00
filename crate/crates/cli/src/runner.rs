//! Builds the configured manifold and executes experiments in declared order.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use ocs_core::constants;
use ocs_core::constructions::{
    bsv, conformal_kahler, conformal_metric, constant_kahler, flat_torus, random_orthogonal, s6_round,
    scaled_product_pair, MapKind, TrigPoly,
};
use ocs_core::gauduchon::{
    conformal_gauduchon_factor, eq1_residual, gauduchon_curvature, k_defect, kg_identity_residual, FactorConfig,
    ResidualReport,
};
use ocs_core::gridcalc::{integrate_dv, TensorField};
use ocs_core::hermitian::{chern_from_metric, identity_audits, nijenhuis_energy_of, nijenhuis_of, OrthogonalACS};
use ocs_core::moduli::{bound_audit, degree_sweep, minimize, PerturbationBasis, SearchConfig};
use ocs_core::riemann::curvature_scalars;

use crate::config::{ManifoldKind, RunConfig};
use crate::error::CliError;
use crate::report::{fmt, residual_table, ExperimentReport, Provenance, ResidualSummary, RunReport, Table, SCHEMA_VERSION};

/// Pointwise largest component magnitude.
fn pointwise_max(f: &TensorField) -> TensorField {
    f.map_points(vec![], |_, v, o| o[0] = v.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

fn sqrt_field(f: &TensorField) -> TensorField {
    f.map_points(vec![], |_, v, o| o[0] = v[0].max(0.0).sqrt())
}

fn from_report(name: &str, r: &ResidualReport) -> ResidualSummary {
    ResidualSummary {
        name: name.to_string(),
        min: r.pointwise.min,
        max: r.pointwise.max,
        mean: r.pointwise.mean,
        integral: Some(r.integrated),
        tolerance: None,
        pass: None,
    }
}

fn rotation(cfg: &RunConfig) -> DMatrix<f64> {
    cfg.manifold.rotation_seed.map_or_else(|| DMatrix::identity(6, 6), |s| random_orthogonal(6, s))
}

/// The configured grid structure at resolution `res`.
pub fn grid_structure(cfg: &RunConfig, res: usize) -> Result<OrthogonalACS, CliError> {
    let m = &cfg.manifold;
    match m.kind {
        ManifoldKind::FlatTorus => {
            let (chart, _) = flat_torus(cfg.basis()?, cfg.active_axes(), res)?;
            Ok(constant_kahler(&chart, &rotation(cfg))?)
        }
        ManifoldKind::ConformalKahler => {
            let axes = cfg.active_axes();
            let (chart, _) = flat_torus(cfg.basis()?, axes.clone(), res)?;
            let u = TrigPoly::random(axes.len(), m.u_max_freq, m.u_amplitude, m.u_seed.unwrap_or(cfg.run.seed));
            Ok(conformal_kahler(&chart, &u, &rotation(cfg))?)
        }
        ManifoldKind::Bsv => {
            let spec = cfg.bsv_spec(m.map_kind.unwrap_or(MapKind::P), res)?;
            Ok(bsv(&spec)?.acs)
        }
        ManifoldKind::S6 | ManifoldKind::ScaledPair => Err(CliError::Config {
            field: "manifold.kind".into(),
            message: format!("{:?} is not a grid manifold", m.kind),
        }),
    }
}

type Outcome = (ExperimentReport, Vec<Table>);

fn experiment(name: &str, resolution: Option<usize>, residuals: Vec<ResidualSummary>, mut tables: Vec<Table>) -> Outcome {
    tables.insert(0, residual_table(name, &residuals));
    let report = ExperimentReport {
        name: name.to_string(),
        resolution,
        residuals,
        tables: tables.iter().map(|t| t.file_name()).collect(),
        unmatched_tolerances: Vec::new(),
        pass: true,
    };
    (report, tables)
}

fn verify_grid(cfg: &RunConfig, acs: &OrthogonalACS) -> Result<Vec<ResidualSummary>, CliError> {
    let h = chern_from_metric(acs)?;
    let g = &h.g;
    let mut out = vec![
        ResidualSummary::scalar("compat", acs.compat_residual()),
        ResidualSummary::scalar("square", acs.square_residual()),
    ];
    out.push(ResidualSummary::field("nijenhuis", &pointwise_max(&nijenhuis_of(acs.j())?), g)?);
    out.push(ResidualSummary::scalar("nijenhuis_energy", nijenhuis_energy_of(acs.j(), g)?));
    out.push(ResidualSummary::field("d_omega", &pointwise_max(&h.d_omega), g)?);
    let torsion = sqrt_field(&h.torsion_sq);
    out.push(ResidualSummary::field("chern_torsion", &torsion, g)?);
    out.push(ResidualSummary::scalar("torsion_integral", integrate_dv(&h.torsion_sq, g)?));
    let tau = sqrt_field(&h.tau_sq);
    let tau_max = tau.max_abs();
    out.push(ResidualSummary::field("tau", &tau, g)?);
    out.push(ResidualSummary::field("eta", &sqrt_field(&h.eta_sq), g)?);
    let eta_max = h.eta_max();
    out.push(ResidualSummary::scalar("eta_over_tau", if tau_max > 0.0 { eta_max / tau_max } else { eta_max }));
    out.push(ResidualSummary::field("theta", &sqrt_field(&h.theta_sq), g)?);
    out.push(ResidualSummary::scalar("chern_nabla_j", h.chern_j_residual));
    out.push(ResidualSummary::scalar("chern_nabla_g", h.chern_g_residual));
    let nj = sqrt_field(&h.nabla_j_sq);
    let c1 = torsion.map_points(vec![], |p, t, o| o[0] = constants::C1_BOUND_FACTOR * t[0] - nj.at(p)[0]);
    out.push(ResidualSummary::field("c1_slack", &c1, g)?);
    let audit = identity_audits(&h)?;
    out.push(ResidualSummary::scalar("d_omega_tau", audit.dw_tau_residual));
    out.push(ResidualSummary::scalar("theta_eta", audit.theta_eta_calibrated_residual));
    for k in cfg.k_values() {
        out.push(ResidualSummary::field(&format!("k_defect_k{k}"), &k_defect(acs, k)?, g)?);
    }
    let cs = curvature_scalars(g, &h.omega)?;
    out.push(from_report("eq1", &eq1_residual(&h, &cs)?));
    let gaud = gauduchon_curvature(&cs);
    for k in cfg.k_values() {
        out.push(from_report(&format!("kg_identity_k{k}"), &kg_identity_residual(&h, &gaud, k)?.residual));
    }
    Ok(out)
}

fn verify_identities(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = &cfg.manifold;
    match m.kind {
        ManifoldKind::S6 => {
            let s6 = s6_round();
            let mut table = Table::new("verify_identities_points", &["index", "compat", "square", "nijenhuis_norm"]);
            let (mut c, mut s, mut nn) = (Vec::new(), Vec::new(), Vec::new());
            for (i, p) in s6.sample_points(m.points, cfg.run.seed).iter().enumerate() {
                let pt = s6.at(p);
                c.push(pt.compat_residual);
                s.push(pt.square_residual);
                nn.push(pt.nijenhuis_norm());
                table.push(vec![i.to_string(), fmt(pt.compat_residual), fmt(pt.square_residual), fmt(pt.nijenhuis_norm())]);
            }
            let residuals = vec![
                ResidualSummary::from_values("compat", &c),
                ResidualSummary::from_values("square", &s),
                ResidualSummary::from_values("nijenhuis_norm", &nn),
            ];
            Ok(experiment("verify_identities", None, residuals, vec![table]))
        }
        ManifoldKind::ScaledPair => {
            let pair = scaled_product_pair(m.alpha, &cfg.e_basis()?, &cfg.f_basis()?)?;
            let (va, vb) = pair.volumes();
            let residuals = vec![
                ResidualSummary::scalar("compat_scaled", pair.scaled.compat_residual()),
                ResidualSummary::scalar("compat_unscaled", pair.unscaled.compat_residual()),
                ResidualSummary::scalar("square", pair.scaled.square_residual().max(pair.unscaled.square_residual())),
                ResidualSummary::scalar("metric_gap", pair.metric_gap()),
                ResidualSummary::scalar("volume_gap", (va - vb).abs()),
            ];
            Ok(experiment("verify_identities", None, residuals, vec![]))
        }
        _ => {
            let acs = grid_structure(cfg, m.resolution)?;
            Ok(experiment("verify_identities", Some(m.resolution), verify_grid(cfg, &acs)?, vec![]))
        }
    }
}

fn run_degree_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let resolutions = cfg.sweep.resolutions.clone().unwrap_or_else(|| vec![cfg.manifold.resolution]);
    let spec = cfg.bsv_spec(MapKind::P, resolutions[0])?;
    let sweep = degree_sweep(&cfg.sweep.degrees, &resolutions, &spec.curve, &spec.fiber_basis)?;
    let mut table = Table::new("degree_sweep", &["degree", "resolution", "torsion_integral", "predicted", "relative_error"]);
    for r in &sweep.rows {
        table.push(vec![
            r.degree.to_string(),
            r.resolution.to_string(),
            fmt(r.torsion_l2),
            fmt(r.predicted),
            fmt(r.relative_error),
        ]);
    }
    let row_err: Vec<f64> = sweep.rows.iter().map(|r| r.relative_error).collect();
    let residuals = vec![
        ResidualSummary::scalar("slope", sweep.slope),
        ResidualSummary::scalar("intercept", sweep.intercept),
        ResidualSummary::scalar("slope_relative_error", sweep.slope_relative_error),
        ResidualSummary::from_values("row_relative_error", &row_err),
        ResidualSummary::scalar("monotone", if sweep.is_monotone() { 1.0 } else { 0.0 }),
    ];
    Ok(experiment("degree_sweep", Some(resolutions[0]), residuals, vec![table]))
}

fn run_search(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = &cfg.search;
    let res = s.resolution.unwrap_or(cfg.manifold.resolution);
    let j0 = grid_structure(cfg, res)?;
    let basis = PerturbationBasis::new(&j0, s.basis_max_freq)?;
    let c0 = basis.random_coeffs(j0.metric(), s.perturbation_norm, s.perturbation_max_freq, cfg.run.seed)?;
    let sc = SearchConfig { step: s.step, max_iters: s.max_iters, grad_eps: s.grad_eps, tol: s.tol, seed: cfg.run.seed };
    sc.validate().map_err(|e| CliError::Config { field: "search".into(), message: e.to_string() })?;
    let traj = minimize(&j0, &basis, &c0, &sc)?;
    let mut table = Table::new("search_trajectory", &["iteration", "energy", "step"]);
    for st in &traj.steps {
        table.push(vec![st.iteration.to_string(), fmt(st.energy), fmt(st.step)]);
    }
    let increases = traj.steps.windows(2).filter(|w| w[1].energy > w[0].energy).count();
    let (e0, e1) = (traj.initial_energy(), traj.final_energy());
    let residuals = vec![
        ResidualSummary::scalar("initial_energy", e0),
        ResidualSummary::scalar("final_energy", e1),
        ResidualSummary::scalar("energy_ratio", if e0 > 0.0 { e1 / e0 } else { 0.0 }),
        ResidualSummary::scalar("monotone_violations", increases as f64),
        ResidualSummary::scalar("iterations", traj.steps.len().saturating_sub(1) as f64),
    ];
    Ok(experiment("search", Some(res), residuals, vec![table]))
}

fn run_gauduchon_factor(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = &cfg.factor;
    let res = f.resolution.unwrap_or(cfg.manifold.resolution);
    let acs = grid_structure(cfg, res)?;
    let n = acs.dim() / 2;
    let fc = FactorConfig { max_freq: f.max_freq, max_iters: f.max_iters, fd_step: f.fd_step, target_ratio: f.target_ratio };
    let sol = conformal_gauduchon_factor(&acs, &fc)?;
    let solved = acs.with_metric(conformal_metric(acs.metric(), &sol.u)?)?;
    let h = chern_from_metric(&solved)?;
    let cs = curvature_scalars(&h.g, &h.omega)?;
    let kg = kg_identity_residual(&h, &gauduchon_curvature(&cs), n - 1)?;
    let mut table = Table::new("gauduchon_factor_history", &["iteration", "defect_l2_sq"]);
    for (i, v) in sol.history.iter().enumerate() {
        table.push(vec![i.to_string(), fmt(*v)]);
    }
    let residuals = vec![
        ResidualSummary::scalar("defect_l2_initial", sol.f0.max(0.0).sqrt()),
        ResidualSummary::scalar("defect_l2_final", sol.f_final.max(0.0).sqrt()),
        ResidualSummary::scalar("defect_l2_ratio", sol.ratio().max(0.0).sqrt()),
        ResidualSummary::field("defect_post", &k_defect(&solved, n - 1)?, &h.g)?,
        from_report("kg_identity_post", &kg.residual),
    ];
    Ok(experiment("gauduchon_factor", Some(res), residuals, vec![table]))
}

fn run_bound_audit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let res = cfg.manifold.resolution;
    let acs = grid_structure(cfg, res)?;
    let mut table = Table::new(
        "bound_audit",
        &["k", "c1_min_slack", "torsion_max", "nabla_j_max", "torsion_bound_min_slack", "gaud_g_min_slack"],
    );
    let mut residuals = Vec::new();
    for (i, k) in cfg.k_values().into_iter().enumerate() {
        let row = bound_audit(&[(cfg.run.name.as_str(), &acs)], k)?.remove(0);
        if i == 0 {
            residuals.push(ResidualSummary::scalar("c1_min_slack", row.c1_min_slack));
            residuals.push(ResidualSummary::scalar("gaud_g_min_slack", row.gaud_g_min_slack));
        }
        residuals.push(ResidualSummary::scalar(&format!("torsion_bound_min_slack_k{k}"), row.torsion_bound_min_slack));
        table.push(vec![
            k.to_string(),
            fmt(row.c1_min_slack),
            fmt(row.torsion_max),
            fmt(row.nabla_j_max),
            fmt(row.torsion_bound_min_slack),
            fmt(row.gaud_g_min_slack),
        ]);
    }
    Ok(experiment("bound_audit", Some(res), residuals, vec![table]))
}

pub fn execute(cfg: &RunConfig, name: &str) -> Result<(ExperimentReport, Vec<Table>), CliError> {
    match name {
        "verify_identities" => verify_identities(cfg),
        "degree_sweep" => run_degree_sweep(cfg),
        "search" => run_search(cfg),
        "gauduchon_factor" => run_gauduchon_factor(cfg),
        "bound_audit" => run_bound_audit(cfg),
        other => Err(CliError::Config { field: "run.experiments".into(), message: format!("unknown experiment '{other}'") }),
    }
}

pub struct RunOutcome {
    pub report: RunReport,
    pub out_dir: PathBuf,
}

/// Validates `cfg`, runs every experiment and writes `report.json` plus CSV tables.
pub fn run(cfg: RunConfig, config_path: Option<&Path>) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let out_dir = cfg.out_dir();
    std::fs::create_dir_all(&out_dir)?;
    let started = chrono::Utc::now();
    let mut experiments = Vec::new();
    for name in &cfg.run.experiments {
        eprintln!("ocs: running {name}");
        let t0 = std::time::Instant::now();
        let (mut report, tables) = execute(&cfg, name)?;
        report.apply_tolerances(cfg.tolerances.get(name));
        for t in &tables {
            t.write(&out_dir)?;
        }
        eprintln!("ocs: {name} {} in {:.1} s", if report.pass { "passed" } else { "FAILED" }, t0.elapsed().as_secs_f64());
        experiments.push(report);
    }
    let pass = experiments.iter().all(|e| e.pass);
    let report = RunReport {
        schema_version: SCHEMA_VERSION.to_string(),
        provenance: Provenance {
            config: cfg,
            config_path: config_path.map(|p| p.display().to_string()),
            code_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            started_at: started.to_rfc3339(),
            finished_at: chrono::Utc::now().to_rfc3339(),
        },
        experiments,
        pass,
    };
    report.write(&out_dir.join("report.json"))?;
    Ok(RunOutcome { report, out_dir })
}
