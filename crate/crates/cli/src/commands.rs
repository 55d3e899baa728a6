use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use gme::dynamics::{integrate, DampingMode, Trajectory};
use gme::selftest::Suite;
use gme::stability::{stability_report, JacobianReport, Verdict};

use crate::config::{parse_config, Config, Scenario, ScenarioConfig, SweepConfig, Task};
use crate::error::CliError;

/// Options shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

const DEFAULT_OUT: &str = "gme-out";

fn load(path: &Path, common: &Common) -> Result<Config, CliError> {
    let text = fs::read(path).map_err(|e| CliError::Internal(format!("cannot read {}: {e}", path.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = common.seed {
        match &mut config {
            Config::Scenario(s) => s.override_seed(seed),
            Config::Sweep(s) => s.override_seed(seed),
        }
    }
    if let Some(tol) = common.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::field("--tol", format!("must be positive and finite, got {tol}")));
        }
    }
    Ok(config)
}

fn out_dir(common: &Common, base: &ScenarioConfig) -> Result<PathBuf, CliError> {
    let dir = common
        .out
        .clone()
        .or_else(|| base.output_directory().cloned())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn expect_scenario(config: Config, command: &str) -> Result<ScenarioConfig, CliError> {
    match config {
        Config::Scenario(s) => Ok(s),
        Config::Sweep(_) => Err(CliError::field("base", format!("`{command}` takes a single scenario; use `scan` for sweeps"))),
    }
}

fn float(x: f64) -> String {
    format!("{x:?}")
}

// ---- simulate ----

pub fn simulate(config_path: &Path, common: &Common) -> Result<(), CliError> {
    let cfg = expect_scenario(load(config_path, common)?, "simulate")?;
    let scenario = cfg.resolve("")?;
    let dir = out_dir(common, &cfg)?;
    let traj = run_trajectory(&scenario, &dir)?;
    let last = traj.observables.last().expect("trajectory holds the initial state");
    println!("steps recorded   {}", traj.len());
    println!("t_final          {}", float(*traj.times.last().unwrap_or(&0.0)));
    println!("free energy      {}", float(last.free_energy));
    println!("c norm           {}", float(last.c_norm));
    println!("min eigenvalue   {}", float(last.min_eig));
    println!("output           {}", dir.display());
    Ok(())
}

fn run_trajectory(scenario: &Scenario, dir: &Path) -> Result<Trajectory, CliError> {
    let traj = integrate(&scenario.initial, &scenario.spec, &scenario.integrator)?;
    write_trajectory(&traj, scenario, &dir.join("trajectory.csv"))?;
    if scenario.dump_states {
        write_states(&traj, &dir.join("states.csv"))?;
    }
    Ok(traj)
}

fn write_trajectory(traj: &Trajectory, scenario: &Scenario, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t"];
    header.extend(scenario.observables.iter().copied());
    w.write_record(&header)?;
    for (t, o) in traj.times.iter().zip(&traj.observables) {
        let mut row = vec![float(*t)];
        for name in &scenario.observables {
            row.push(float(match *name {
                "purity" => o.purity,
                "entropy" => o.entropy,
                "free_energy" => o.free_energy,
                "c_norm" => o.c_norm,
                "trace_error" => o.trace_error,
                "min_eig" => o.min_eig,
                _ => unreachable!("observable names are validated"),
            }));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per recorded step and matrix entry.
fn write_states(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "row", "col", "re", "im"])?;
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let m = rho.as_matrix();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                w.write_record([float(*t), r.to_string(), c.to_string(), float(z.re), float(z.im)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

// ---- jacobian ----

fn resolve_for_jacobian(cfg: &ScenarioConfig, prefix: &str) -> Result<Scenario, CliError> {
    let scenario = cfg.resolve(prefix)?;
    if scenario.mode != DampingMode::Nonlinear {
        let path = if prefix.is_empty() { "mode".to_string() } else { format!("{prefix}.mode") };
        return Err(CliError::field(path, "stability analysis linearizes the nonlinear equation; set \"mode\": \"nonlinear\""));
    }
    Ok(scenario)
}

pub fn jacobian(config_path: &Path, common: &Common) -> Result<(), CliError> {
    let cfg = expect_scenario(load(config_path, common)?, "jacobian")?;
    let scenario = resolve_for_jacobian(&cfg, "")?;
    let dir = out_dir(common, &cfg)?;
    let report = stability_report(&scenario.spec, &scenario.stability)?;
    write_jacobian_files(&report, &dir)?;
    let tol = common.tol.unwrap_or(scenario.route_tol);

    println!("dimension            {}", scenario.spec.dim());
    println!("verdict              {}", report.verdict);
    println!("max real part        {}", float(report.max_real_part));
    println!("diagonal criterion   {}", report.diagonal_criterion.as_str());
    println!("min diagonal         {}", float(report.min_diagonal()));
    println!("analytic vs fd       {}", float(report.discrepancies.analytic_vs_fd));
    println!("closed form vs fd    {}", float(report.discrepancies.closed_form_vs_fd));
    println!("closed form vs an.   {}", float(report.discrepancies.closed_form_vs_analytic));
    if let Some(h) = report.fd_step {
        println!("fd step              {}", float(h));
    }
    if !report.degenerate_labels.is_empty() {
        let labels: Vec<String> = report.degenerate_labels.iter().map(|l| l.to_string()).collect();
        println!("fd-filled columns    {}", labels.join(" "));
    }
    println!("output               {}", dir.display());
    check_report(&report, tol)
}

/// Route disagreement takes precedence: a verdict from routes that do not
/// agree is not worth reporting as such.
fn check_report(report: &JacobianReport, tol: f64) -> Result<(), CliError> {
    let d = report.discrepancies;
    let worst = [d.analytic_vs_fd, d.closed_form_vs_fd, d.closed_form_vs_analytic]
        .into_iter()
        .filter(|x| !x.is_nan())
        .fold(0.0, f64::max);
    if worst > tol {
        return Err(CliError::RouteMismatch(format!("largest discrepancy {worst:e} exceeds {tol:e}")));
    }
    if report.verdict == Verdict::Unstable {
        return Err(CliError::Unstable(format!("max real part {:e}", report.max_real_part)));
    }
    Ok(())
}

fn write_jacobian_files(report: &JacobianReport, dir: &Path) -> Result<(), CliError> {
    let labels: Vec<String> = report.labels.iter().map(|l| l.to_string()).collect();

    let mut w = csv::Writer::from_path(dir.join("jacobian.csv"))?;
    let mut header = vec!["label".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (r, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..labels.len()).map(|c| float(report.j_total[(r, c)])));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("spectrum.csv"))?;
    w.write_record(["re", "im"])?;
    for z in &report.eigenvalues {
        w.write_record([float(z.re), float(z.im)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("diagonals.csv"))?;
    w.write_record(["label", "closed_form", "fd_value", "abs_diff"])?;
    for (a, label) in labels.iter().enumerate() {
        let cf = report.diag_closed_form[a];
        let (fd, diff) = match &report.diag_fd {
            Some(d) => (float(d[a]), float((cf - d[a]).abs())),
            None => (String::new(), String::new()),
        };
        w.write_record([label.clone(), float(cf), fd, diff])?;
    }
    w.flush()?;
    Ok(())
}

// ---- scan ----

enum PointResult {
    Stability(Box<JacobianReport>, f64),
    Simulate(Trajectory),
}

pub fn scan(config_path: &Path, common: &Common) -> Result<(), CliError> {
    let sweep: SweepConfig = match load(config_path, common)? {
        Config::Sweep(s) => s,
        Config::Scenario(_) => return Err(CliError::field("base", "`scan` needs a sweep config with `base`, `axis` and `values`")),
    };
    let points = sweep.points()?;
    let dir = out_dir(common, &sweep.base)?;
    let tol = common.tol;

    let results: Vec<Result<PointResult, CliError>> = points
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let point_dir = dir.join(format!("point_{i:03}"));
            fs::create_dir_all(&point_dir)?;
            match sweep.task {
                Task::Stability => {
                    let scenario = resolve_for_jacobian(&point.config, "base")?;
                    let report = stability_report(&scenario.spec, &scenario.stability)?;
                    write_jacobian_files(&report, &point_dir)?;
                    Ok(PointResult::Stability(Box::new(report), scenario.route_tol))
                }
                Task::Simulate => {
                    let scenario = point.config.resolve("base")?;
                    run_trajectory(&scenario, &point_dir).map(PointResult::Simulate)
                }
            }
        })
        .collect();

    let mut w = csv::Writer::from_path(dir.join("scan.csv"))?;
    match sweep.task {
        Task::Stability => w.write_record(["value", "max_real_part", "min_diag", "verdict"])?,
        Task::Simulate => w.write_record(["value", "final_free_energy", "final_c_norm", "min_eig"])?,
    }
    let mut first_error: Option<CliError> = None;
    for (point, result) in points.iter().zip(results) {
        match result {
            Ok(PointResult::Stability(report, route_tol)) => {
                w.write_record([point.label.clone(), float(report.max_real_part), float(report.min_diagonal()), report.verdict.to_string()])?;
                println!("{} = {}: {} (max Re {:e})", axis_name(&sweep), point.label, report.verdict, report.max_real_part);
                if let Err(e) = check_report(&report, tol.unwrap_or(route_tol)) {
                    first_error = Some(worse(first_error, e));
                }
            }
            Ok(PointResult::Simulate(traj)) => {
                let last = traj.observables.last().expect("trajectory holds the initial state");
                let min_eig = traj.observables.iter().map(|o| o.min_eig).fold(f64::INFINITY, f64::min);
                w.write_record([point.label.clone(), float(last.free_energy), float(last.c_norm), float(min_eig)])?;
                println!("{} = {}: c norm {:e}", axis_name(&sweep), point.label, last.c_norm);
            }
            Err(e) => {
                w.write_record([point.label.clone(), "nan".into(), "nan".into(), "error".into()])?;
                eprintln!("{} = {}: {e}", axis_name(&sweep), point.label);
                first_error = Some(worse(first_error, e));
            }
        }
    }
    w.flush()?;
    println!("output {}", dir.display());
    first_error.map_or(Ok(()), Err)
}

fn axis_name(sweep: &SweepConfig) -> &'static str {
    match sweep.axis {
        crate::config::Axis::Beta => "beta",
        crate::config::Axis::GammaE => "gamma_e",
        crate::config::Axis::Dimension => "dimension",
        crate::config::Axis::Seed => "seed",
    }
}

/// Keep the error with the larger exit code, the earlier one on ties.
fn worse(current: Option<CliError>, new: CliError) -> CliError {
    match current {
        Some(c) if c.exit_code() >= new.exit_code() => c,
        _ => new,
    }
}

// ---- selftest ----

pub fn selftest(seed: u64) -> Result<(), CliError> {
    let suite = Suite::new(seed);
    let outcomes = suite.run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    if failed.is_empty() {
        println!("all {} criteria passed (seed {seed})", outcomes.len());
        Ok(())
    } else {
        Err(CliError::SelfTest(format!("criteria {} failed", failed.join(", "))))
    }
}
