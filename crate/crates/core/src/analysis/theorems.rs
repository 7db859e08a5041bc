//! Whole-run verifiers: exact synchronization on fixed graphs, gain sweeps
//! for epsilon-synchronization, assumption feasibility and the invariant
//! cube of one-dimensional networks.

use serde::Serialize;

use super::diagnostics::{common_zero_set, diameter, sync_verdict, tail_indices};
use crate::batch::{self, ExecMode};
use crate::convex_geometry::{check_a2, theta_star, ConvexBody};
use crate::error::{Error, Result};
use crate::graphs::is_strongly_connected;
use crate::potentials::PotentialSpec;
use crate::report::CheckReport;
use crate::simulator::{integrate, IntegratorConfig, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Tolerances {
    /// Final diameter bound when the zero sets intersect.
    pub sync_tol: f64,
    /// Bound on each final state's distance to the intersection.
    pub set_tol: f64,
    /// Tail diameter that must be exceeded when the zero sets are disjoint.
    pub necessity_floor: f64,
    pub tail_fraction: f64,
}

impl Default for Theorem1Tolerances {
    fn default() -> Self {
        Theorem1Tolerances { sync_tol: 1e-6, set_tol: 1e-5, necessity_floor: 1e-3, tail_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub intersection: Option<ConvexBody>,
    pub runs: Vec<CheckReport>,
    pub pass: bool,
}

/// Synchronization iff the zero sets intersect, checked by simulation from
/// each initial state on a fixed undirected connected graph.
///
/// With a nonempty intersection each run must reach `sync_tol` in diameter
/// and end within `set_tol` of the intersection. Otherwise each run's
/// smallest tail diameter is reported and must exceed `necessity_floor`.
pub fn check_theorem1(
    network: &Network,
    gain: f64,
    x0_set: &[Vec<f64>],
    cfg: &IntegratorConfig,
    tols: &Theorem1Tolerances,
    mode: ExecMode,
) -> Result<Theorem1Report> {
    let signal = network.signal();
    if !signal.is_fixed() {
        return Err(Error::Precondition("exact-sync check needs a fixed graph".into()));
    }
    let graph = signal.graph_at(0.0);
    if !graph.is_symmetric() || !is_strongly_connected(graph) {
        return Err(Error::Precondition("exact-sync check needs an undirected connected graph".into()));
    }
    let intersection = common_zero_set(network.potentials())?;
    let n = network.node_count();
    let m = network.dimension();
    let trajectories = batch::integrate_initial_states(mode, network, gain, x0_set, cfg);

    let mut runs = Vec::with_capacity(x0_set.len());
    for (r, traj) in trajectories.into_iter().enumerate() {
        let traj = traj?;
        let last = traj.last();
        let report = match &intersection {
            Some(body) => {
                let final_diameter = diameter(&last.x, n, m);
                let mut off_set = 0.0_f64;
                for i in 0..n {
                    off_set = off_set.max(body.distance(last.block(i, m))?);
                }
                let pass = final_diameter <= tols.sync_tol && off_set <= tols.set_tol;
                CheckReport::new("theorem1_sufficiency", pass, final_diameter.max(off_set))
                    .with_location(format!("run {r}"))
                    .with_params(serde_json::json!({
                        "final_diameter": final_diameter,
                        "distance_to_intersection": off_set,
                        "sync_tol": tols.sync_tol,
                        "set_tol": tols.set_tol,
                    }))
            }
            None => {
                let times = traj.times();
                let observed_floor = tail_indices(&times, tols.tail_fraction)
                    .into_iter()
                    .map(|k| diameter(&traj.samples[k].x, n, m))
                    .fold(f64::INFINITY, f64::min);
                CheckReport::new(
                    "theorem1_necessity",
                    observed_floor > tols.necessity_floor,
                    observed_floor,
                )
                .with_location(format!("run {r}"))
                .with_params(serde_json::json!({
                    "observed_floor": observed_floor,
                    "necessity_floor": tols.necessity_floor,
                }))
            }
        };
        runs.push(report);
    }
    let pass = runs.iter().all(|r| r.pass);
    Ok(Theorem1Report { intersection, runs, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gain: f64,
    pub epsilon_estimate: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub epsilon: f64,
    /// Estimates never rise by more than 5% from one gain to the next.
    pub monotone: bool,
    /// The largest gain's estimate is below `epsilon`.
    pub reaches_epsilon: bool,
    pub pass: bool,
}

/// Slack allowed for an estimate to exceed its predecessor.
pub const SWEEP_SLACK: f64 = 0.05;

/// Runs one simulation per gain and tabulates the tail diameter.
pub fn sweep_k(
    network: &Network,
    gains: &[f64],
    x0: &[f64],
    cfg: &IntegratorConfig,
    epsilon: f64,
    tail_fraction: f64,
    mode: ExecMode,
) -> Result<SweepTable> {
    if gains.is_empty() {
        return Err(Error::InvalidInput("gain list is empty".into()));
    }
    if gains.iter().any(|k| !(*k > 0.0 && k.is_finite())) || gains.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("gains must be positive and strictly increasing".into()));
    }
    let rows: Vec<SweepRow> = batch::integrate_gains(mode, network, gains, x0, cfg)
        .into_iter()
        .zip(gains)
        .map(|(traj, &gain)| match traj {
            Ok(traj) => SweepRow {
                gain,
                epsilon_estimate: Some(sync_verdict(&traj, tail_fraction, epsilon).epsilon_estimate),
                error: None,
            },
            Err(e) => SweepRow { gain, epsilon_estimate: None, error: Some(e.to_string()) },
        })
        .collect();
    let estimates: Option<Vec<f64>> = rows.iter().map(|r| r.epsilon_estimate).collect();
    let (monotone, reaches_epsilon) = match &estimates {
        Some(est) => (
            est.windows(2).all(|w| w[1] <= w[0] * (1.0 + SWEEP_SLACK) + 1e-12),
            *est.last().expect("nonempty") < epsilon,
        ),
        None => (false, false),
    };
    Ok(SweepTable { rows, epsilon, monotone, reaches_epsilon, pass: monotone && reaches_epsilon })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionStatus {
    /// Holds structurally for the given catalog instance.
    Certified,
    SampledPass,
    SampledFail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub a2: AssumptionStatus,
    pub a3: AssumptionStatus,
    pub a2_sample: Option<CheckReport>,
}

impl FeasibilityReport {
    pub fn to_report(&self) -> CheckReport {
        let pass = self.a2 != AssumptionStatus::SampledFail && self.a3 != AssumptionStatus::SampledFail;
        CheckReport::new("feasibility", pass, self.a2_sample.as_ref().map_or(0.0, |r| r.worst_value))
            .with_params(serde_json::json!({ "a2": self.a2, "a3": self.a3 }))
    }
}

/// Points per axis of the A2 sampling grid in dimension >= 2.
const A2_GRID: usize = 21;

/// Reports which standing assumptions hold. Coercivity (every catalog kind)
/// certifies A3; in one dimension bounded zero sets certify A2, otherwise A2
/// is sampled on a grid around `Theta*`.
pub fn check_feasibility(potentials: &[PotentialSpec]) -> Result<FeasibilityReport> {
    let body = theta_star(potentials)?;
    let a3 = if potentials.iter().all(|p| p.is_coercive()) {
        AssumptionStatus::Certified
    } else {
        AssumptionStatus::SampledFail
    };
    if body.dimension() == 1 {
        return Ok(FeasibilityReport { a2: AssumptionStatus::Certified, a3, a2_sample: None });
    }
    let (lo, hi) = body.bounding_box();
    let m = lo.len();
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let margin = (hi[k] - lo[k]).max(1.0) * 2.0;
            let (a, b) = (lo[k] - margin, hi[k] + margin);
            (0..A2_GRID).map(|s| a + (b - a) * s as f64 / (A2_GRID - 1) as f64).collect()
        })
        .collect();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        samples = samples
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    let report = check_a2(potentials, &samples)?;
    let a2 = if report.pass { AssumptionStatus::SampledPass } else { AssumptionStatus::SampledFail };
    Ok(FeasibilityReport { a2, a3, a2_sample: Some(report) })
}

/// Bounds `[y_lo - eta, y_hi + eta]` of the invariant cube, where `y_lo` and
/// `y_hi` are the extreme minimizers over all nodes.
pub fn invariant_cube(potentials: &[PotentialSpec], eta: f64) -> Result<(f64, f64)> {
    if potentials.iter().any(|p| p.dimension() != 1) {
        return Err(Error::Precondition("invariant cube needs one-dimensional nodes".into()));
    }
    if !(eta >= 0.0) {
        return Err(Error::InvalidInput("eta must be nonnegative".into()));
    }
    let (lo, hi) = theta_star(potentials)?.bounding_box();
    Ok((lo[0] - eta, hi[0] + eta))
}

/// Slack allowed outside the cube.
pub const CUBE_SLACK: f64 = 1e-8;

pub fn check_invariant_cube(
    network: &Network,
    gain: f64,
    eta: f64,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<CheckReport> {
    let (lo, hi) = invariant_cube(network.potentials(), eta)?;
    if x0.iter().any(|v| *v < lo || *v > hi) {
        return Ok(CheckReport::precondition_unmet(
            "invariant_cube",
            format!("x0 lies outside [{lo}, {hi}]"),
        ));
    }
    let traj = integrate(network, gain, x0, cfg)?;
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0.0;
    for s in &traj.samples {
        for v in &s.x {
            let excess = (lo - v).max(v - hi);
            if excess > worst {
                worst = excess;
                at = s.t;
            }
        }
    }
    Ok(CheckReport::new("invariant_cube", worst <= CUBE_SLACK, worst)
        .with_location(format!("t = {at}"))
        .with_params(serde_json::json!({ "lo": lo, "hi": hi, "eta": eta, "slack": CUBE_SLACK })))
}
