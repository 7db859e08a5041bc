//! Verification checks a scenario may request, tagged by `name`.

use serde::{Deserialize, Serialize};
use syncflow::analysis::{
    check_common_limit, check_feasibility, check_invariant_cube, check_monotone, check_node_optimum,
    check_spectral_bound, check_theorem1, minimize_fg, sync_verdict, DiagnosticsSeries, SweepTable,
    Theorem1Tolerances,
};
use syncflow::batch::ExecMode;
use syncflow::graphs::certify_ujsc;
use syncflow::{CheckReport, Error, Trajectory};

use crate::error::Result;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Tail diameter below `tol`.
    Sync {
        #[serde(default = "sync_tol")]
        tol: f64,
    },
    /// Synchronization iff the zero sets intersect, on a fixed undirected graph.
    Theorem1 {
        #[serde(default = "sync_tol")]
        sync_tol: f64,
        #[serde(default = "set_tol")]
        set_tol: f64,
        #[serde(default = "necessity_floor")]
        necessity_floor: f64,
    },
    /// Over the K list, tail diameters decrease and the last one is below `epsilon`.
    EpsilonSync { epsilon: f64 },
    MonotoneV {
        #[serde(default)]
        rise_tol: Option<f64>,
    },
    MonotoneTheta {
        #[serde(default)]
        rise_tol: Option<f64>,
    },
    CommonLimit {
        #[serde(default = "sync_tol")]
        tol: f64,
    },
    NodeOptimum {
        #[serde(default = "sync_tol")]
        tol: f64,
    },
    SpectralBound {
        #[serde(default = "spectral_tol")]
        tol: f64,
        /// Gradient-norm target for the minimizer of F_G.
        #[serde(default = "gradient_tol")]
        gradient_tol: f64,
    },
    Feasibility {},
    InvariantCube {
        #[serde(default = "cube_eta")]
        eta: f64,
    },
    Ujsc {
        window: f64,
        #[serde(default)]
        horizon: Option<f64>,
    },
}

fn sync_tol() -> f64 {
    1e-6
}

fn set_tol() -> f64 {
    1e-5
}

fn necessity_floor() -> f64 {
    1e-3
}

fn spectral_tol() -> f64 {
    1e-8
}

fn gradient_tol() -> f64 {
    1e-10
}

fn cube_eta() -> f64 {
    0.5
}

const MINIMIZER_MAX_ITER: usize = 200_000;

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Sync { .. } => "sync",
            CheckSpec::Theorem1 { .. } => "theorem1",
            CheckSpec::EpsilonSync { .. } => "epsilon_sync",
            CheckSpec::MonotoneV { .. } => "monotone_v",
            CheckSpec::MonotoneTheta { .. } => "monotone_theta",
            CheckSpec::CommonLimit { .. } => "common_limit",
            CheckSpec::NodeOptimum { .. } => "node_optimum",
            CheckSpec::SpectralBound { .. } => "spectral_bound",
            CheckSpec::Feasibility {} => "feasibility",
            CheckSpec::InvariantCube { .. } => "invariant_cube",
            CheckSpec::Ujsc { .. } => "ujsc",
        }
    }
}

/// Maps a precondition failure to a failing report; other errors propagate.
fn or_unmet(name: &str, r: syncflow::Result<CheckReport>) -> Result<CheckReport> {
    match r {
        Ok(rep) => Ok(rep),
        Err(Error::Precondition(reason)) => Ok(CheckReport::precondition_unmet(name, reason)),
        Err(e) => Err(e.into()),
    }
}

fn series_report(name: &str, series: Option<&Vec<f64>>, diag: &DiagnosticsSeries, rise_tol: Option<f64>) -> Result<CheckReport> {
    match series {
        Some(s) => or_unmet(name, check_monotone(&name["monotone_".len()..], s, &diag.times, rise_tol)),
        None => Ok(CheckReport::precondition_unmet(name, "series is not computable for this scenario")),
    }
}

/// Evaluates one check against the primary trajectory and, for
/// `epsilon_sync`, the sweep table.
pub fn evaluate(
    check: &CheckSpec,
    scenario: &Scenario,
    traj: &Trajectory,
    diag: &DiagnosticsSeries,
    sweep: Option<&SweepTable>,
    mode: ExecMode,
) -> Result<Vec<CheckReport>> {
    let net = &scenario.network;
    let gain = scenario.gain();
    let name = check.name();
    let report = match check {
        CheckSpec::Sync { tol } => {
            let v = sync_verdict(traj, scenario.tail_fraction, *tol);
            CheckReport::new(name, v.exact_sync, v.epsilon_estimate).with_params(serde_json::json!({
                "tol": tol,
                "tail_fraction": scenario.tail_fraction,
                "limit_point": v.limit_point,
            }))
        }
        CheckSpec::Theorem1 { sync_tol, set_tol, necessity_floor } => {
            let tols = Theorem1Tolerances {
                sync_tol: *sync_tol,
                set_tol: *set_tol,
                necessity_floor: *necessity_floor,
                tail_fraction: scenario.tail_fraction,
            };
            let rep = check_theorem1(net, gain, std::slice::from_ref(&scenario.x0), &scenario.config, &tols, mode)?;
            return Ok(rep.runs);
        }
        CheckSpec::EpsilonSync { epsilon } => {
            let table = sweep.expect("sweep table is computed for epsilon_sync");
            let last = table.rows.last().and_then(|r| r.epsilon_estimate).unwrap_or(f64::NAN);
            CheckReport::new(name, table.pass, last).with_params(serde_json::json!({
                "epsilon": epsilon,
                "monotone": table.monotone,
                "reaches_epsilon": table.reaches_epsilon,
                "rows": table.rows,
            }))
        }
        CheckSpec::MonotoneV { rise_tol } => series_report(name, diag.v.as_ref(), diag, *rise_tol)?,
        CheckSpec::MonotoneTheta { rise_tol } => series_report(name, diag.theta.as_ref(), diag, *rise_tol)?,
        CheckSpec::CommonLimit { tol } => or_unmet(name, check_common_limit(diag, scenario.tail_fraction, *tol))?,
        CheckSpec::NodeOptimum { tol } => or_unmet(name, check_node_optimum(diag, scenario.tail_fraction, *tol))?,
        CheckSpec::SpectralBound { tol, gradient_tol } => {
            let g = net.signal().graph_at(0.0);
            let min = minimize_fg(net.potentials(), g, gain, &scenario.x0, *gradient_tol, MINIMIZER_MAX_ITER)?;
            check_spectral_bound(&min.point, net.potentials(), g, gain, *tol)?
        }
        CheckSpec::Feasibility {} => check_feasibility(net.potentials())?.to_report(),
        CheckSpec::InvariantCube { eta } => check_invariant_cube(net, gain, *eta, &scenario.x0, &scenario.config)?,
        CheckSpec::Ujsc { window, horizon } => {
            let signal = net.signal();
            let horizon = horizon.unwrap_or(if signal.is_fixed() { *window } else { signal.period() + window });
            let cert = certify_ujsc(signal, *window, horizon)?;
            let mut rep = CheckReport::new(name, cert.holds, if cert.holds { 0.0 } else { 1.0 })
                .with_params(serde_json::json!({
                    "window": window,
                    "windows_checked": cert.windows_checked,
                }));
            if let Some((a, b)) = cert.failing_window {
                rep = rep.with_location(format!("window [{a}, {b})"));
            }
            rep
        }
    };
    Ok(vec![report])
}
