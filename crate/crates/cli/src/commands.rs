use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use syncflow::analysis::{common_zero_set, diagnostics, sweep_k, DiagnosticsSeries, Reference, SweepTable};
use syncflow::batch::ExecMode;
use syncflow::simulator::integrate;
use syncflow::Trajectory;

use crate::checks::{evaluate, CheckSpec};
use crate::error::{CliError, ExitStatus, Result};
use crate::output::{plot_script, write_json, write_sweep_csv, write_trajectory_csv, RunReport};
use crate::scenario::{load_scenario, validate_gain_list, Scenario};

/// Everything produced by one scenario run.
#[derive(Debug)]
pub struct Execution {
    pub trajectory: Option<Trajectory>,
    pub diagnostics: Option<DiagnosticsSeries>,
    pub report: RunReport,
    pub status: ExitStatus,
}

fn reference(s: &Scenario) -> Result<Reference> {
    Ok(match &s.z_star {
        Some(z) => Reference::Point(z.clone()),
        None if common_zero_set(s.network.potentials())?.is_some() => Reference::Auto,
        None => Reference::None,
    })
}

fn epsilon_of(s: &Scenario) -> Option<f64> {
    s.checks.iter().find_map(|c| match c {
        CheckSpec::EpsilonSync { epsilon } => Some(*epsilon),
        _ => None,
    })
}

fn run_sweep(s: &Scenario, epsilon: Option<f64>, mode: ExecMode) -> Result<SweepTable> {
    Ok(sweep_k(
        &s.network,
        &s.gains,
        &s.x0,
        &s.config,
        epsilon.unwrap_or(f64::INFINITY),
        s.tail_fraction,
        mode,
    )?)
}

/// Integrates at the primary gain, computes diagnostics, the sweep table
/// when a K list is given, and every requested check.
///
/// Numerical failures end up in the report with status 3; input errors are
/// returned.
pub fn execute(s: &Scenario, mode: ExecMode) -> Result<Execution> {
    let mut report = RunReport {
        scenario: s.id.clone(),
        status: "pass".into(),
        gain: s.gain(),
        gains: s.gains.clone(),
        samples: 0,
        checks: Vec::new(),
        sweep: None,
        error: None,
    };
    let numerical = |mut report: RunReport, e: CliError, traj, diag| {
        report.status = "numerical_error".into();
        report.error = Some(e.to_string());
        Execution { trajectory: traj, diagnostics: diag, report, status: ExitStatus::NumericalError }
    };

    let traj = match integrate(&s.network, s.gain(), &s.x0, &s.config) {
        Ok(t) => t,
        Err(e) if e.is_input_error() => return Err(e.into()),
        Err(e) => return Ok(numerical(report, e.into(), None, None)),
    };
    report.samples = traj.len();
    let diag = diagnostics(&traj, s.network.potentials(), &reference(s)?)?;

    let epsilon = epsilon_of(s);
    if s.gain_list || epsilon.is_some() {
        report.sweep = Some(run_sweep(s, epsilon, mode)?);
    }
    for check in &s.checks {
        match evaluate(check, s, &traj, &diag, report.sweep.as_ref(), mode) {
            Ok(mut reps) => report.checks.append(&mut reps),
            Err(e) if e.exit_status() == ExitStatus::NumericalError => {
                return Ok(numerical(report, e, Some(traj), Some(diag)));
            }
            Err(e) => return Err(e),
        }
    }
    let status = if report.checks.iter().all(|c| c.pass) {
        ExitStatus::Pass
    } else {
        report.status = "check_failure".into();
        ExitStatus::CheckFailure
    };
    Ok(Execution { trajectory: Some(traj), diagnostics: Some(diag), report, status })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("creating {}", path.display()), e))
}

/// Writes `trajectory.csv`, `report.json`, `plot.gp` and, with a K list,
/// `sweep.csv` into `out_dir`.
pub fn write_outputs(s: &Scenario, run: &Execution, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    if let (Some(traj), Some(diag)) = (&run.trajectory, &run.diagnostics) {
        write_trajectory_csv(create(&out_dir.join("trajectory.csv"))?, traj, diag)?;
        std::fs::write(out_dir.join("plot.gp"), plot_script(s.node_count(), s.dimension(), &s.id))
            .map_err(|e| CliError::io("writing plot.gp", e))?;
    }
    if let Some(table) = &run.report.sweep {
        write_sweep_csv(create(&out_dir.join("sweep.csv"))?, table)?;
    }
    write_json(&out_dir.join("report.json"), &run.report)
}

fn fail(e: &CliError) -> ExitStatus {
    eprintln!("error: {e}");
    e.exit_status()
}

fn print_checks(report: &RunReport) {
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        match &c.location {
            Some(loc) => println!("{verdict} {} worst={:e} ({loc})", c.check, c.worst_value),
            None => println!("{verdict} {} worst={:e}", c.check, c.worst_value),
        }
    }
    if let Some(e) = &report.error {
        println!("ERROR {e}");
    }
}

pub fn simulate(path: &Path, out_dir: &Path, mode: ExecMode) -> ExitStatus {
    let result = load_scenario(path).and_then(|s| {
        let run = execute(&s, mode)?;
        write_outputs(&s, &run, out_dir)?;
        Ok(run)
    });
    match result {
        Ok(run) => {
            print_checks(&run.report);
            println!("{}: {} ({} samples) -> {}", run.report.scenario, run.report.status, run.report.samples, out_dir.display());
            run.status
        }
        Err(e) => fail(&e),
    }
}

pub fn verify(path: &Path, json: bool, mode: ExecMode) -> ExitStatus {
    match load_scenario(path).and_then(|s| execute(&s, mode)) {
        Ok(run) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&run.report).expect("report serializes"));
            } else {
                print_checks(&run.report);
                println!("{}: {}", run.report.scenario, run.report.status);
            }
            run.status
        }
        Err(e) => fail(&e),
    }
}

/// Runs only the K sweep, with `gains` replacing the scenario's K.
pub fn sweep(path: &Path, gains: &[f64], epsilon: Option<f64>, out_dir: &Path, mode: ExecMode) -> ExitStatus {
    let result = load_scenario(path).and_then(|mut s| {
        validate_gain_list(gains)?;
        s.gains = gains.to_vec();
        s.gain_list = true;
        let epsilon = epsilon.or_else(|| epsilon_of(&s));
        let table = run_sweep(&s, epsilon, mode)?;
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
        write_sweep_csv(create(&out_dir.join("sweep.csv"))?, &table)?;
        Ok((table, epsilon))
    });
    match result {
        Ok((table, epsilon)) => {
            for row in &table.rows {
                match (&row.epsilon_estimate, &row.error) {
                    (Some(est), _) => println!("K={} epsilon_estimate={est:e}", row.gain),
                    (None, Some(err)) => println!("K={} error: {err}", row.gain),
                    (None, None) => println!("K={}", row.gain),
                }
            }
            if table.rows.iter().any(|r| r.error.is_some()) {
                ExitStatus::NumericalError
            } else if epsilon.is_some() && !table.pass {
                println!("FAIL epsilon_sync (monotone: {}, reaches epsilon: {})", table.monotone, table.reaches_epsilon);
                ExitStatus::CheckFailure
            } else {
                ExitStatus::Pass
            }
        }
        Err(e) => fail(&e),
    }
}

/// Sizes the global rayon pool from `SYNCFLOW_THREADS` when it is set.
#[cfg(feature = "parallel")]
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SYNCFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Invalid(format!("SYNCFLOW_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads() -> Result<()> {
    Ok(())
}
