use serde::Serialize;

use crate::convex_geometry::{intersect, theta_star, ConvexBody};
use crate::error::{check_dim, Error, Result};
use crate::potentials::PotentialSpec;
use crate::report::CheckReport;
use crate::simulator::Trajectory;
use crate::vector::{dist, norm_sq, sub};

/// Reference point `z*` for the `V_i` series.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Centroid of the intersection of the zero sets; an error if it is empty.
    Auto,
    Point(Vec<f64>),
    /// Skip the `V` series.
    None,
}

/// Per-sample synchronization and Lyapunov quantities of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    /// `max_{i,j} |x_i - x_j|`.
    pub diameter: Vec<f64>,
    pub z_star: Option<Vec<f64>>,
    /// `V_i = |x_i - z*|^2`, indexed `[sample][node]`.
    pub v_nodes: Option<Vec<Vec<f64>>>,
    /// `V = max_i V_i`.
    pub v: Option<Vec<f64>>,
    /// `max_i |x_i|^2_{Theta*}`.
    pub theta: Option<Vec<f64>>,
    /// Distance of each node to its own argmin set, `[sample][node]`.
    pub argmin_distance: Vec<Vec<f64>>,
}

/// Intersection of all zero sets, `None` when empty.
pub fn common_zero_set(potentials: &[PotentialSpec]) -> Result<Option<ConvexBody>> {
    let sets = potentials
        .iter()
        .map(|p| p.zero_set())
        .collect::<Result<Vec<_>>>()?;
    intersect(&sets)
}

/// Largest pairwise distance between node blocks of a stacked state.
pub fn diameter(x: &[f64], node_count: usize, m: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..node_count {
        for j in (i + 1)..node_count {
            worst = worst.max(dist(&x[i * m..(i + 1) * m], &x[j * m..(j + 1) * m]));
        }
    }
    worst
}

pub fn diagnostics(
    traj: &Trajectory,
    potentials: &[PotentialSpec],
    reference: &Reference,
) -> Result<DiagnosticsSeries> {
    let n = traj.node_count;
    let m = traj.dimension;
    if potentials.len() != n {
        return Err(Error::InvalidInput("potential count differs from trajectory".into()));
    }
    let z_star = match reference {
        Reference::Auto => Some(
            common_zero_set(potentials)?
                .ok_or_else(|| {
                    Error::Precondition(
                        "zero sets do not intersect; supply z* explicitly or skip V".into(),
                    )
                })?
                .centroid(),
        ),
        Reference::Point(z) => {
            check_dim(m, z.len())?;
            Some(z.clone())
        }
        Reference::None => None,
    };
    let theta_body = theta_star(potentials).ok();
    let zero_sets = potentials
        .iter()
        .map(|p| p.zero_set())
        .collect::<Result<Vec<_>>>()?;

    let samples = traj.samples.len();
    let mut out = DiagnosticsSeries {
        times: traj.times(),
        diameter: Vec::with_capacity(samples),
        z_star: z_star.clone(),
        v_nodes: z_star.as_ref().map(|_| Vec::with_capacity(samples)),
        v: z_star.as_ref().map(|_| Vec::with_capacity(samples)),
        theta: theta_body.as_ref().map(|_| Vec::with_capacity(samples)),
        argmin_distance: Vec::with_capacity(samples),
    };
    for s in &traj.samples {
        out.diameter.push(diameter(&s.x, n, m));
        if let (Some(z), Some(vn), Some(v)) = (&z_star, &mut out.v_nodes, &mut out.v) {
            let row: Vec<f64> = (0..n).map(|i| norm_sq(&sub(s.block(i, m), z))).collect();
            v.push(row.iter().copied().fold(0.0, f64::max));
            vn.push(row);
        }
        if let (Some(body), Some(theta)) = (&theta_body, &mut out.theta) {
            let mut worst = 0.0_f64;
            for i in 0..n {
                let d = body.distance(s.block(i, m))?;
                worst = worst.max(d * d);
            }
            theta.push(worst);
        }
        let row = (0..n)
            .map(|i| zero_sets[i].distance(s.block(i, m)))
            .collect::<Result<Vec<_>>>()?;
        out.argmin_distance.push(row);
    }
    Ok(out)
}

/// Indices of the samples in the last `fraction` of the horizon.
pub fn tail_indices(times: &[f64], fraction: f64) -> Vec<usize> {
    let Some(&last) = times.last() else {
        return Vec::new();
    };
    let first = times[0];
    let cutoff = last - fraction * (last - first);
    (0..times.len()).filter(|&k| times[k] >= cutoff).collect()
}

/// Exact and epsilon synchronization judged on the tail of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncVerdict {
    pub exact_sync: bool,
    /// Supremum of the diameter over the tail window.
    pub epsilon_estimate: f64,
    /// Mean of the final node states when synchronized.
    pub limit_point: Option<Vec<f64>>,
}

pub fn sync_verdict(traj: &Trajectory, tail_fraction: f64, tol: f64) -> SyncVerdict {
    let n = traj.node_count;
    let m = traj.dimension;
    let times = traj.times();
    let epsilon_estimate = tail_indices(&times, tail_fraction)
        .into_iter()
        .map(|k| diameter(&traj.samples[k].x, n, m))
        .fold(0.0, f64::max);
    let exact_sync = epsilon_estimate < tol;
    let limit_point = exact_sync.then(|| {
        let last = traj.last();
        (0..m)
            .map(|k| (0..n).map(|i| last.x[i * m + k]).sum::<f64>() / n as f64)
            .collect()
    });
    SyncVerdict { exact_sync, epsilon_estimate, limit_point }
}

/// Default tolerance for upward drift in a monotone series.
pub fn default_rise_tol(series: &[f64]) -> f64 {
    1e-8 * series.first().copied().unwrap_or(0.0).max(1.0)
}

/// Passes iff `series[k + 1] <= series[k] + rise_tol` for every `k`.
pub fn check_monotone(
    name: &str,
    series: &[f64],
    times: &[f64],
    rise_tol: Option<f64>,
) -> Result<CheckReport> {
    if series.len() < 2 {
        return Err(Error::Precondition("monotonicity needs at least two samples".into()));
    }
    check_dim(series.len(), times.len())?;
    let rise_tol = rise_tol.unwrap_or_else(|| default_rise_tol(series));
    let (k, worst) = series
        .windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let pass = worst <= rise_tol;
    Ok(CheckReport::new(format!("monotone_{name}"), pass, worst)
        .with_location(format!("k = {k}, t = {}", times[k + 1]))
        .with_params(serde_json::json!({ "rise_tol": rise_tol, "samples": series.len() })))
}

fn tail_window(diag: &DiagnosticsSeries, tail_fraction: f64) -> Result<Vec<usize>> {
    let idx = tail_indices(&diag.times, tail_fraction);
    if idx.len() < 10 {
        return Err(Error::Precondition(format!(
            "tail window holds {} samples; at least 10 are needed",
            idx.len()
        )));
    }
    Ok(idx)
}

/// All `V_i` settle on one common value over the tail window.
pub fn check_common_limit(
    diag: &DiagnosticsSeries,
    tail_fraction: f64,
    tol: f64,
) -> Result<CheckReport> {
    let v_nodes = diag
        .v_nodes
        .as_ref()
        .ok_or_else(|| Error::Precondition("V series were not computed".into()))?;
    let idx = tail_window(diag, tail_fraction)?;
    let n = v_nodes[0].len();
    let mut spread = 0.0_f64;
    for &k in &idx {
        let row = &v_nodes[k];
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        spread = spread.max(hi - lo);
    }
    let mut oscillation = 0.0_f64;
    let mut worst_node = 0;
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut lo = vec![f64::INFINITY; n];
    for &k in &idx {
        for (i, &v) in v_nodes[k].iter().enumerate() {
            hi[i] = hi[i].max(v);
            lo[i] = lo[i].min(v);
        }
    }
    for (i, (hi, lo)) in hi.into_iter().zip(lo).enumerate() {
        if hi - lo > oscillation {
            oscillation = hi - lo;
            worst_node = i;
        }
    }
    let v = diag.v.as_ref().expect("computed with v_nodes");
    let d_star_sq = idx.iter().map(|&k| v[k]).sum::<f64>() / idx.len() as f64;
    let worst = spread.max(oscillation);
    Ok(CheckReport::new("common_limit", worst <= tol, worst)
        .with_location(format!("node {worst_node}"))
        .with_params(serde_json::json!({
            "tol": tol,
            "tail_fraction": tail_fraction,
            "node_spread": spread,
            "node_oscillation": oscillation,
            "d_star": d_star_sq.sqrt(),
        })))
}

/// Every node ends up in (or near) its own argmin set.
pub fn check_node_optimum(
    diag: &DiagnosticsSeries,
    tail_fraction: f64,
    tol: f64,
) -> Result<CheckReport> {
    let idx = tail_window(diag, tail_fraction)?;
    let n = diag.argmin_distance[0].len();
    let mut worst = 0.0_f64;
    let mut worst_node = 0;
    for i in 0..n {
        let sup = idx
            .iter()
            .map(|&k| diag.argmin_distance[k][i])
            .fold(0.0, f64::max);
        if sup > worst {
            worst = sup;
            worst_node = i;
        }
    }
    Ok(CheckReport::new("node_optimum", worst <= tol, worst)
        .with_location(format!("node {worst_node}"))
        .with_params(serde_json::json!({ "tol": tol, "tail_fraction": tail_fraction })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{SwitchingSignal, WeightedDigraph};
    use crate::simulator::{integrate, IntegratorConfig, Network};

    fn quad(c: f64) -> PotentialSpec {
        PotentialSpec::quadratic(vec![c], 1.0).unwrap()
    }

    fn two_node(centers: [f64; 2], gain: f64, x0: [f64; 2], t_end: f64) -> (Trajectory, Vec<PotentialSpec>) {
        let pots = vec![quad(centers[0]), quad(centers[1])];
        let g = WeightedDigraph::undirected(2, &[(0, 1, 1.0)]).unwrap();
        let net = Network::new(pots.clone(), SwitchingSignal::fixed(g)).unwrap();
        let traj = integrate(&net, gain, &x0, &IntegratorConfig::new(0.01, t_end, 0.1)).unwrap();
        (traj, pots)
    }

    #[test]
    fn constant_consensus_trajectory() {
        let (traj, pots) = two_node([1.0, 1.0], 2.0, [1.0, 1.0], 5.0);
        let d = diagnostics(&traj, &pots, &Reference::Auto).unwrap();
        assert!(d.diameter.iter().all(|v| *v == 0.0));
        assert!(d.v.unwrap().iter().all(|v| *v == 0.0));
        assert!(d.theta.unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_node_v_closed_form() {
        let pots = vec![quad(1.0)];
        let net = Network::new(pots.clone(), SwitchingSignal::fixed(WeightedDigraph::empty(1).unwrap())).unwrap();
        let traj = integrate(&net, 0.0, &[4.0], &IntegratorConfig::new(0.01, 3.0, 0.1)).unwrap();
        let d = diagnostics(&traj, &pots, &Reference::Auto).unwrap();
        for (t, v) in d.times.iter().zip(d.v.unwrap()) {
            assert!((v - 9.0 * (-2.0 * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn two_node_v_is_nonincreasing() {
        let (traj, pots) = two_node([0.5, 0.5], 1.0, [-3.0, 2.0], 10.0);
        let d = diagnostics(&traj, &pots, &Reference::Auto).unwrap();
        let r = check_monotone("v", d.v.as_ref().unwrap(), &d.times, None).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn auto_reference_requires_intersection() {
        let (traj, pots) = two_node([0.0, 1.0], 1.0, [0.0, 0.0], 1.0);
        assert!(matches!(
            diagnostics(&traj, &pots, &Reference::Auto),
            Err(Error::Precondition(_))
        ));
        let d = diagnostics(&traj, &pots, &Reference::None).unwrap();
        assert!(d.v.is_none() && d.theta.is_some());
    }

    #[test]
    fn monotone_detects_rise() {
        let r = check_monotone("x", &[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], Some(0.0)).unwrap();
        assert!(!r.pass);
        assert_eq!(r.location.as_deref(), Some("k = 0, t = 1"));
        assert!(check_monotone("x", &[1.0], &[0.0], None).is_err());
    }

    #[test]
    fn verdict_and_tail_checks() {
        let (traj, pots) = two_node([0.0, 0.0], 1.0, [3.0, -1.0], 30.0);
        let v = sync_verdict(&traj, 0.2, 1e-6);
        assert!(v.exact_sync && v.epsilon_estimate < 1e-6);
        assert!(v.limit_point.unwrap()[0].abs() < 1e-6);
        let d = diagnostics(&traj, &pots, &Reference::Auto).unwrap();
        assert!(check_common_limit(&d, 0.2, 1e-8).unwrap().pass);
        assert!(check_node_optimum(&d, 0.2, 1e-6).unwrap().pass);

        // distinct centers: equilibrium is off each argmin
        let (traj, pots) = two_node([0.0, 1.0], 1.0, [0.0, 0.0], 30.0);
        let d = diagnostics(&traj, &pots, &Reference::None).unwrap();
        let r = check_node_optimum(&d, 0.2, 1e-3).unwrap();
        assert!(!r.pass);
        assert!((r.worst_value - 1.0 / 3.0).abs() < 1e-6);
        assert!(check_common_limit(&d, 0.2, 1e-3).is_err());
    }
}
