//! Subcommand bodies. Each returns the files it produced plus a deferred
//! status, so a report can be written even when it records a refusal.

use rayon::prelude::*;
use serde_json::{json, Value};

use twistspec_core::certify::{bracket_eigenvalues, essential_lower_bound, thm1_window, BracketRequest, CertifyError};
use twistspec_core::eigensolve::LobpcgOptions;
use twistspec_core::geometry::{map_point, quasibounded_probe, CrossSection, TwistProfile};
use twistspec_core::oracle::{bundled_cases, check_case, OracleSettings, OracleStatus};
use twistspec_core::tube_operator::{eigs_tube, reference_guess, tube_form, LongitudinalGrid};
use twistspec_core::xsection::{assemble_xsection, build_grid, eigs_xsection_with, richardson, TransverseGrid};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub seed: u64,
}

#[derive(Debug)]
pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub status: Result<(), CliError>,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Self { artifacts, status: Ok(()) }
    }
}

/// 17 significant digits, `.` decimal separator.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Runtime(format!("csv: {e}"));
    w.write_record(&header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(format!("csv: {e}")))
}

fn numbered(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (1..=k).map(move |i| format!("{prefix}_{i}"))
}

pub fn cmd_xsection(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome, CliError> {
    let omega = cfg.shape()?;
    let k = cfg.solver.k;
    let grid = build_grid(omega, cfg.h)?;
    let fine_grid = if cfg.richardson { Some(build_grid(omega, 0.5 * cfg.h)?) } else { None };
    let solve = |grid: &TransverseGrid, beta: f64, k: usize| {
        let lobpcg = LobpcgOptions::new(k, cfg.solver.tol, cfg.solver.max_iter, opts.seed);
        eigs_xsection_with(&assemble_xsection(grid, beta), &lobpcg)
    };
    let rows = cfg
        .betas
        .par_iter()
        .map(|&beta| -> Result<Vec<String>, CliError> {
            let spec = solve(&grid, beta, k)?;
            let extrapolated = match &fine_grid {
                Some(fine) => fmt_f64(richardson(spec.eigenvalues[0], solve(fine, beta, 1)?.eigenvalues[0])),
                None => String::new(),
            };
            let mut row = vec![fmt_f64(beta)];
            row.extend(spec.eigenvalues.iter().map(|&v| fmt_f64(v)));
            row.extend(spec.residuals.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(cfg.h));
            row.push(extrapolated);
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["beta".to_string()];
    header.extend(numbered("lambda", k));
    header.extend(numbered("residual", k));
    header.extend(["h".to_string(), "lambda_1_extrapolated".to_string()]);
    Ok(Outcome::ok(vec![Artifact { name: "xsection.csv", bytes: csv_bytes(header, rows)? }]))
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome, CliError> {
    let (omega, profile) = (cfg.shape()?, cfg.profile()?);
    let k = cfg.solver.k;
    let tgrid = build_grid(omega, cfg.h)?;
    let points: Vec<_> = cfg.half_lengths.iter().flat_map(|&l| cfg.ends.iter().map(move |&e| (l, e))).collect();
    let rows = points
        .par_iter()
        .map(|&(l, ends)| -> Result<Vec<String>, CliError> {
            let lgrid = LongitudinalGrid::with_spacing(l, cfg.h1, ends)?;
            let initial = reference_guess(&tgrid, &lgrid, profile, k, cfg.solver.tol, opts.seed)?;
            let lobpcg = LobpcgOptions::new(k, cfg.solver.tol, cfg.solver.max_iter, opts.seed).with_initial(initial);
            let spec = eigs_tube(&tube_form(&tgrid, &lgrid, profile), &lobpcg)?;
            let mut row = vec![fmt_f64(l), ends.to_string()];
            row.extend(spec.eigenvalues.iter().map(|&v| fmt_f64(v)));
            row.extend(spec.residuals.iter().map(|&v| fmt_f64(v)));
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["L".to_string(), "ends".to_string()];
    header.extend(numbered("lambda", k));
    header.extend(numbered("residual", k));
    Ok(Outcome::ok(vec![Artifact { name: "spectrum.csv", bytes: csv_bytes(header, rows)? }]))
}

fn error_kind(e: &CertifyError) -> &'static str {
    match e {
        CertifyError::NoOrigin => "NoOrigin",
        CertifyError::NotDiverging(_) => "NotDiverging",
        CertifyError::HalfPlaneViolated { .. } => "HalfPlaneViolated",
        CertifyError::LengthBelowThreshold { .. } => "LengthBelowThreshold",
        CertifyError::InvalidArgument(_) => "InvalidArgument",
        CertifyError::Geometry(_) => "Geometry",
        CertifyError::XSection(_) => "XSection",
        CertifyError::Tube(_) => "Tube",
    }
}

fn refusal(e: &CertifyError) -> Value {
    json!({ "refused": { "kind": error_kind(e), "message": e.to_string() } })
}

fn is_hypothesis(e: &CertifyError) -> bool {
    matches!(
        e,
        CertifyError::NoOrigin
            | CertifyError::NotDiverging(_)
            | CertifyError::HalfPlaneViolated { .. }
            | CertifyError::LengthBelowThreshold { .. }
    )
}

/// Theorem 1 window, the exterior bound for each `n`, and optional
/// eigenvalue brackets. Refused hypotheses are recorded in the report; a
/// refused essential bound or bracket request makes the exit status 3.
pub fn cmd_certify(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome, CliError> {
    let (omega, profile) = (cfg.shape()?, cfg.profile()?);
    let summary = omega.summary();
    let window = match thm1_window(&summary) {
        Ok(w) => serde_json::to_value(w).expect("serializable"),
        Err(e) => refusal(&e),
    };
    let mut violation: Option<String> = None;
    let mut failure: Option<CliError> = None;
    let mut record = |e: CertifyError| -> Value {
        let v = refusal(&e);
        if is_hypothesis(&e) {
            violation.get_or_insert_with(|| e.to_string());
        } else if failure.is_none() {
            failure = Some(e.into());
        }
        v
    };
    let bounds: Vec<_> = cfg
        .certify
        .n
        .par_iter()
        .map(|&n| essential_lower_bound(omega, profile, n, cfg.certify.sampling, cfg.certify.search_cap))
        .collect();
    let essential: Vec<Value> = cfg
        .certify
        .n
        .iter()
        .zip(bounds)
        .map(|(&n, r)| match r {
            Ok(b) => serde_json::to_value(b).expect("serializable"),
            Err(e) => {
                let mut v = record(e);
                v["n"] = json!(n);
                v
            }
        })
        .collect();
    let brackets = match (cfg.certify.half_length, cfg.certify.brackets) {
        (Some(half_length), k) if k > 0 => {
            let req = BracketRequest {
                h: cfg.h,
                h1: cfg.h1,
                half_length,
                n: cfg.certify.bracket_n.unwrap_or(cfg.certify.n[0]),
                k,
                tol: cfg.solver.tol,
                max_iter: cfg.solver.max_iter,
                seed: opts.seed,
                sampling: cfg.certify.sampling,
                search_cap: cfg.certify.search_cap,
                warm_start: None,
            };
            match bracket_eigenvalues(omega, profile, &req) {
                Ok(r) => serde_json::to_value(r).expect("serializable"),
                Err(e) => record(e),
            }
        }
        _ => Value::Null,
    };
    let report = json!({
        "shape": omega,
        "profile": profile,
        "summary": summary,
        "theorem1": window,
        "essential": essential,
        "brackets": brackets,
    });
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    bytes.push(b'\n');
    let status = match (failure, violation) {
        (Some(f), _) => Err(f),
        (None, Some(v)) => Err(CliError::Hypothesis(v)),
        (None, None) => Ok(()),
    };
    Ok(Outcome { artifacts: vec![Artifact { name: "certify.json", bytes }], status })
}

/// Legacy ASCII VTK polydata of the tube surface: `slices` copies of the
/// sampled boundary of `ω`, swept by the tube map and stitched by triangles.
pub fn tube_mesh_vtk(omega: &CrossSection, profile: &TwistProfile, slices: usize, samples: usize, x1: (f64, f64)) -> String {
    let mut out = String::from("# vtk DataFile Version 3.0\ntwisted tube surface\nASCII\nDATASET POLYDATA\n");
    out.push_str(&format!("POINTS {} double\n", slices * samples));
    for i in 0..slices {
        let s = x1.0 + (x1.1 - x1.0) * i as f64 / (slices - 1) as f64;
        for j in 0..samples {
            let t = omega.boundary_point(j as f64 / samples as f64);
            let p = map_point(profile, [s, t[0], t[1]]);
            out.push_str(&format!("{} {} {}\n", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])));
        }
    }
    let triangles = 2 * (slices - 1) * samples;
    out.push_str(&format!("POLYGONS {} {}\n", triangles, 4 * triangles));
    for i in 0..slices - 1 {
        for j in 0..samples {
            let a = i * samples + j;
            let b = i * samples + (j + 1) % samples;
            let (c, d) = (a + samples, b + samples);
            out.push_str(&format!("3 {a} {b} {d}\n3 {a} {d} {c}\n"));
        }
    }
    out
}

pub fn cmd_geometry(cfg: &ExperimentConfig, _opts: RunOptions) -> Result<Outcome, CliError> {
    let (omega, profile) = (cfg.shape()?, cfg.profile()?);
    let m = &cfg.mesh;
    let vtk = tube_mesh_vtk(omega, profile, m.slices, m.boundary_samples, (m.x1_min, m.x1_max));
    let sampling = cfg.certify.sampling;
    let values = cfg
        .stations
        .par_iter()
        .map(|&x1| quasibounded_probe(omega, profile, &[x1], sampling.transverse_spacing, sampling.ray).map(|v| v[0]))
        .collect::<Result<Vec<f64>, _>>()?;
    let rows = cfg.stations.iter().zip(&values).map(|(&x, &v)| vec![fmt_f64(x), fmt_f64(v)]).collect();
    let probe = csv_bytes(vec!["x1".into(), "dist_upper_bound".into()], rows)?;
    Ok(Outcome::ok(vec![Artifact { name: "tube.vtk", bytes: vtk.into_bytes() }, Artifact { name: "probe.csv", bytes: probe }]))
}

/// Every bundled operator checked dense-versus-iterative; any row other
/// than `pass` makes the exit status 1 after the table is written.
pub fn cmd_oracle(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome, CliError> {
    let settings = OracleSettings {
        k: cfg.oracle.k,
        tol: cfg.oracle.tol,
        max_iter: cfg.solver.max_iter.max(10_000),
        seed: opts.seed,
        dense_cap: cfg.oracle.dense_cap,
    };
    let cases = bundled_cases();
    let rows: Vec<_> = cases.par_iter().map(|c| check_case(c, &settings, cfg.oracle.inject_asymmetry)).collect();
    let failed: Vec<String> = rows.iter().filter(|r| r.status != OracleStatus::Pass).map(|r| format!("{} ({})", r.id, r.status)).collect();
    let table = rows
        .into_iter()
        .map(|r| {
            vec![
                r.id,
                r.module,
                r.order.to_string(),
                r.k.to_string(),
                r.status.to_string(),
                r.max_rel_err.map(fmt_f64).unwrap_or_default(),
                r.detail,
            ]
        })
        .collect();
    let header = ["id", "module", "order", "k", "status", "max_rel_err", "detail"].map(String::from).to_vec();
    let status = if failed.is_empty() { Ok(()) } else { Err(CliError::Runtime(format!("oracle checks not passed: {}", failed.join(", ")))) };
    Ok(Outcome { artifacts: vec![Artifact { name: "oracle.csv", bytes: csv_bytes(header, table)? }], status })
}
