use std::path::Path;

use anyhow::bail;
use berryfw::covariant::{curvatures, frak0_field, frak_field};
use berryfw::diagonalizer::{
    analyze, corrected_connections, diagonalize_classical, energy_order0, energy_order1,
    energy_order2_canonical, energy_order2_covariant, report_defects, ConnectionSet,
};
use berryfw::dynamics::{integrate, NeutrinoBand};
use berryfw::linalg::eigh;
use berryfw::verify::{bracket_check, run_suite, BracketReport, Check, Suite};
use berryfw::{EnergyForm, EnergyReport, ModelSpec, PhasePoint, Tolerances, TrajectoryState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{csv_writer, num, write_json, MatrixJson};

/// What a finished command reports back to `main`.
pub enum Status {
    Ok,
    /// Ran to completion, but some points, runs or checks failed.
    Partial(String),
}

#[derive(Serialize)]
struct PointError {
    index: usize,
    point: PhasePoint,
    error: String,
}

fn point_cols(i: usize, x: &PhasePoint) -> Vec<String> {
    let mut v = vec![i.to_string()];
    v.extend(x.r.iter().chain(x.p.iter()).map(|&c| num(c)));
    v
}

const POINT_HEADER: [&str; 7] = ["point", "R_x", "R_y", "R_z", "P_x", "P_y", "P_z"];

fn run_points<T, F>(pool: &rayon::ThreadPool, pts: &[PhasePoint], f: F) -> Vec<Result<T, String>>
where
    T: Send,
    F: Fn(&PhasePoint) -> berryfw::Result<T> + Sync,
{
    pool.install(|| pts.par_iter().map(|x| f(x).map_err(|e| e.to_string())).collect())
}

fn split<T>(pts: &[PhasePoint], results: Vec<Result<T, String>>) -> (Vec<(usize, T)>, Vec<PointError>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push((i, v)),
            Err(error) => errors.push(PointError {
                index: i,
                point: pts[i],
                error,
            }),
        }
    }
    (ok, errors)
}

fn status_from(errors: &[PointError]) -> Status {
    if errors.is_empty() {
        Status::Ok
    } else {
        Status::Partial(format!("{} point(s) failed", errors.len()))
    }
}

fn energy_report(model: &ModelSpec, x: &PhasePoint, cfg: &RunConfig) -> berryfw::Result<EnergyReport> {
    let pd = analyze(model, x, &cfg.tolerances)?;
    let mut r = match (cfg.form, cfg.order) {
        (_, 0) => energy_order0(&pd, cfg.hbar),
        (EnergyForm::Canonical, 1) => energy_order1(&pd, cfg.hbar),
        (EnergyForm::Canonical, _) => energy_order2_canonical(&pd, cfg.hbar),
        (EnergyForm::Covariant, _) => energy_order2_covariant(&pd, cfg.hbar),
    };
    r.order = cfg.order;
    r.form = cfg.form;
    Ok(r)
}

#[derive(Serialize)]
struct EnergyEntry {
    index: usize,
    point: PhasePoint,
    /// Eigenvalues of the total energy matrix, descending.
    levels: Vec<f64>,
    total: MatrixJson,
    zeroth: MatrixJson,
    first: MatrixJson,
    second: MatrixJson,
    bracket_term: MatrixJson,
    complete: bool,
    off_block: f64,
    hermiticity: f64,
    fd_discrepancy: f64,
}

#[derive(Serialize)]
struct DiagonalizeReport<'a> {
    model: &'a str,
    hbar: f64,
    order: u8,
    form: EnergyForm,
    tolerances: Tolerances,
    points: Vec<EnergyEntry>,
    errors: Vec<PointError>,
}

pub fn diagonalize(cfg: &RunConfig, out: &Path, pool: &rayon::ThreadPool) -> anyhow::Result<Status> {
    let model = cfg.model_spec()?;
    let pts = cfg.phase_points()?;
    let groups = model.group_index();
    let results = run_points(pool, &pts, |x| energy_report(&model, x, cfg));
    let (ok, errors) = split(&pts, results);

    let mut w = csv_writer(out, "diagonalize.csv")?;
    let mut header: Vec<String> = POINT_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend((0..model.dim).map(|k| format!("eps_{k}")));
    header.extend(["off_block", "complete"].map(String::from));
    w.write_record(&header)?;
    let mut entries = Vec::new();
    for (i, r) in ok {
        let total = r.total();
        let (levels, _) = eigh(&total);
        let (off_block, hermiticity) = report_defects(&r, &groups);
        let mut row = point_cols(i, &pts[i]);
        row.extend(levels.iter().map(|&v| num(v)));
        row.push(num(off_block));
        row.push(r.complete.to_string());
        w.write_record(&row)?;
        entries.push(EnergyEntry {
            index: i,
            point: pts[i],
            levels,
            total: (&total).into(),
            zeroth: (&r.zeroth).into(),
            first: (&r.first).into(),
            second: (&r.second).into(),
            bracket_term: (&r.bracket_term).into(),
            complete: r.complete,
            off_block,
            hermiticity,
            fd_discrepancy: r.fd_discrepancy,
        });
    }
    w.flush()?;
    let status = status_from(&errors);
    let report = DiagonalizeReport {
        model: &model.name,
        hbar: cfg.hbar,
        order: cfg.order,
        form: cfg.form,
        tolerances: cfg.tolerances,
        points: entries,
        errors,
    };
    write_json(out, "diagonalize.json", "diagonalize", &report)?;
    Ok(status)
}

const SLOT_NAMES: [&str; 6] = ["A_R_x", "A_R_y", "A_R_z", "A_P_x", "A_P_y", "A_P_z"];

#[derive(Serialize)]
struct MatrixEntry {
    index: usize,
    point: PhasePoint,
    matrices: Vec<(String, MatrixJson)>,
}

#[derive(Serialize)]
struct MatrixReport<'a> {
    model: &'a str,
    hbar: f64,
    order: u8,
    points: Vec<MatrixEntry>,
    errors: Vec<PointError>,
}

fn write_long_csv(
    out: &Path,
    name: &str,
    pts: &[PhasePoint],
    rows: &[(usize, Vec<(String, berryfw::CMat)>)],
) -> anyhow::Result<()> {
    let mut w = csv_writer(out, name)?;
    let mut header: Vec<&str> = POINT_HEADER.to_vec();
    header.extend(["name", "row", "col", "re", "im"]);
    w.write_record(&header)?;
    for (i, mats) in rows {
        for (label, m) in mats {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let mut row = point_cols(*i, &pts[*i]);
                    row.extend([label.clone(), r.to_string(), c.to_string()]);
                    row.extend([num(m[(r, c)].re), num(m[(r, c)].im)]);
                    w.write_record(&row)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn emit_matrices(
    cfg: &RunConfig,
    out: &Path,
    command: &str,
    model: &ModelSpec,
    pts: &[PhasePoint],
    results: Vec<Result<Vec<(String, berryfw::CMat)>, String>>,
) -> anyhow::Result<Status> {
    let (ok, errors) = split(pts, results);
    write_long_csv(out, &format!("{command}.csv"), pts, &ok)?;
    let status = status_from(&errors);
    let report = MatrixReport {
        model: &model.name,
        hbar: cfg.hbar,
        order: cfg.order,
        points: ok
            .into_iter()
            .map(|(i, mats)| MatrixEntry {
                index: i,
                point: pts[i],
                matrices: mats.iter().map(|(n, m)| (n.clone(), m.into())).collect(),
            })
            .collect(),
        errors,
    };
    write_json(out, &format!("{command}.json"), command, &report)?;
    Ok(status)
}

pub fn connections(cfg: &RunConfig, out: &Path, pool: &rayon::ThreadPool) -> anyhow::Result<Status> {
    let model = cfg.model_spec()?;
    let pts = cfg.phase_points()?;
    let results = run_points(pool, &pts, |x| {
        let pd = analyze(&model, x, &cfg.tolerances)?;
        let set: Vec<_> = if cfg.order == 0 {
            pd.a0.clone()
        } else {
            ConnectionSet::six(&corrected_connections(&pd, cfg.hbar))
        };
        Ok(SLOT_NAMES.iter().map(|s| s.to_string()).zip(set).collect())
    });
    emit_matrices(cfg, out, "connections", &model, &pts, results)
}

pub fn curvature(cfg: &RunConfig, out: &Path, pool: &rayon::ThreadPool) -> anyhow::Result<Status> {
    let model = cfg.model_spec()?;
    let pts = cfg.phase_points()?;
    let tol = cfg.tolerances;
    let results = run_points(pool, &pts, |x| {
        let anchor = Some(diagonalize_classical(&model, x, &tol)?.vectors());
        let cs = if cfg.order == 0 {
            curvatures(&frak0_field(&model, &tol, anchor), x, cfg.hbar, &tol)?
        } else {
            curvatures(&frak_field(&model, &tol, cfg.hbar, anchor), x, cfg.hbar, &tol)?
        };
        let mut mats = Vec::new();
        for (label, set) in [("rr", &cs.rr), ("pp", &cs.pp), ("pr", &cs.pr)] {
            for i in 0..3 {
                for j in 0..3 {
                    mats.push((format!("theta_{label}_{i}{j}"), set[i][j].clone()));
                }
            }
        }
        Ok(mats)
    });
    emit_matrices(cfg, out, "curvature", &model, &pts, results)
}

#[derive(Serialize)]
struct RunSummary {
    index: usize,
    initial: usize,
    lambda: f64,
    file: Option<String>,
    steps_taken: usize,
    helicity_drift: f64,
    energy_drift: f64,
    rejected_steps: usize,
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    model: &'a str,
    config: &'a RunConfig,
    runs: Vec<RunSummary>,
}

pub fn trajectory(cfg: &RunConfig, out: &Path, pool: &rayon::ThreadPool) -> anyhow::Result<Status> {
    let tc = &cfg.trajectory;
    if !(tc.dt.is_finite() && tc.dt > 0.0) {
        bail!("trajectory dt must be positive, got {}", tc.dt);
    }
    if tc.initial.is_empty() || tc.lambdas.is_empty() {
        bail!("trajectory needs at least one initial state and one helicity");
    }
    let model = cfg.model_spec()?;
    for &lambda in &tc.lambdas {
        NeutrinoBand::new(&model, cfg.hbar, lambda, cfg.tolerances)?;
    }
    let jobs: Vec<(usize, f64)> = (0..tc.initial.len())
        .flat_map(|i| tc.lambdas.iter().map(move |&l| (i, l)))
        .collect();
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, lambda)| {
                let band = NeutrinoBand::new(&model, cfg.hbar, lambda, cfg.tolerances)?;
                let s = tc.initial[i];
                let st = TrajectoryState {
                    t: 0.0,
                    r: s.r,
                    p: s.p,
                    lambda,
                };
                integrate(&band, &st, tc.dt, tc.steps, tc.method, tc.rk45)
            })
            .collect()
    });
    let mut runs = Vec::new();
    let mut failed = 0;
    for (k, (&(i, lambda), res)) in jobs.iter().zip(results).enumerate() {
        match res {
            Ok(tr) => {
                let file = format!("trajectory_{i}_{}.csv", if lambda > 0.0 { "plus" } else { "minus" });
                let mut w = csv_writer(out, &file)?;
                w.write_record(["t", "r_x", "r_y", "r_z", "P_x", "P_y", "P_z", "lambda", "eps", "|v|"])?;
                for p in &tr.points {
                    let s = &p.state;
                    let mut row = vec![num(s.t)];
                    row.extend(s.r.iter().chain(s.p.iter()).map(|&c| num(c)));
                    row.extend([num(s.lambda), num(p.eps), num(p.speed)]);
                    w.write_record(&row)?;
                }
                w.flush()?;
                runs.push(RunSummary {
                    index: k,
                    initial: i,
                    lambda,
                    file: Some(file),
                    steps_taken: tr.points.len() - 1,
                    helicity_drift: tr.helicity_drift,
                    energy_drift: tr.energy_drift,
                    rejected_steps: tr.rejected_steps,
                    error: None,
                });
            }
            Err(e) => {
                failed += 1;
                runs.push(RunSummary {
                    index: k,
                    initial: i,
                    lambda,
                    file: None,
                    steps_taken: 0,
                    helicity_drift: f64::NAN,
                    energy_drift: f64::NAN,
                    rejected_steps: 0,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let manifest = Manifest {
        model: &model.name,
        config: cfg,
        runs,
    };
    write_json(out, "trajectory_manifest.json", "trajectory", &manifest)?;
    Ok(if failed == 0 {
        Status::Ok
    } else {
        Status::Partial(format!("{failed} run(s) failed"))
    })
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    seed: u64,
    suites: Vec<&'static str>,
    passed: usize,
    failed: usize,
    checks: &'a [Check],
}

pub fn verify(cfg: &RunConfig, suites: &[Suite], out: &Path, pool: &rayon::ThreadPool) -> anyhow::Result<Status> {
    let opts = &cfg.verify;
    let per_suite: Vec<Vec<Check>> = pool.install(|| suites.par_iter().map(|&s| run_suite(s, opts)).collect());
    let checks: Vec<Check> = per_suite.into_iter().flatten().collect();
    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut w = csv_writer(out, "verify.csv")?;
    w.write_record(["suite", "name", "value", "tolerance", "pass"])?;
    for c in &checks {
        w.write_record([c.suite.clone(), c.name.clone(), num(c.value), num(c.tolerance), c.pass.to_string()])?;
        println!(
            "{} {}/{}: {:.3e} (tol {:.1e}){}",
            if c.pass { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.value,
            c.tolerance,
            c.detail.as_ref().map(|d| format!(" {d}")).unwrap_or_default()
        );
    }
    w.flush()?;
    let report = VerifyReport {
        seed: opts.seed,
        suites: suites.iter().map(|s| s.name()).collect(),
        passed: checks.len() - failed,
        failed,
        checks: &checks,
    };
    write_json(out, "verify.json", "verify", &report)?;
    Ok(if failed == 0 {
        Status::Ok
    } else {
        Status::Partial(format!("{failed} of {} checks failed", checks.len()))
    })
}

pub fn bracket(cfg: &RunConfig, out: &Path) -> anyhow::Result<Status> {
    let rep: BracketReport = bracket_check(cfg.seed, cfg.bracket.cases, cfg.bracket.max_degree)?;
    println!(
        "product rule {}/{}, invariance {}/{}, symmetrized words {}/{}",
        rep.product_rule_exact,
        rep.cases,
        rep.invariance_exact,
        rep.cases,
        rep.symmetrized_zero_exact,
        rep.cases
    );
    write_json(out, "bracket_check.json", "bracket-check", &rep)?;
    Ok(if rep.all_exact() {
        Status::Ok
    } else {
        Status::Partial(format!("{} inexact case(s)", rep.failures.len()))
    })
}
