//! Right-hand side assembly and fixed-step RK4 integration of the coupled
//! network, with steps aligned to every switching instant.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::graphs::{laplacian, SwitchingSignal, WeightedDigraph};
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::vector::inf_norm;

/// Default bound on `|x|_inf` before integration is aborted.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e8;

/// Node potentials plus the communication schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    potentials: Vec<PotentialSpec>,
    signal: SwitchingSignal,
    dimension: usize,
}

impl Network {
    pub fn new(potentials: Vec<PotentialSpec>, signal: SwitchingSignal) -> Result<Self> {
        let first = potentials
            .first()
            .ok_or_else(|| Error::InvalidInput("network needs at least one node".into()))?;
        let dimension = first.dimension();
        for p in &potentials {
            check_dim(dimension, p.dimension())?;
        }
        if signal.node_count() != potentials.len() {
            return Err(Error::InvalidInput(format!(
                "signal graphs have {} nodes but {} potentials were given",
                signal.node_count(),
                potentials.len()
            )));
        }
        Ok(Network { potentials, signal, dimension })
    }

    pub fn potentials(&self) -> &[PotentialSpec] {
        &self.potentials
    }

    pub fn signal(&self) -> &SwitchingSignal {
        &self.signal
    }

    pub fn node_count(&self) -> usize {
        self.potentials.len()
    }

    /// State dimension `m` of each node.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn state_len(&self) -> usize {
        self.dimension * self.potentials.len()
    }

    /// Writes the vector field for a given active graph into `out`.
    pub(crate) fn field_into(&self, graph: &WeightedDigraph, gain: f64, x: &[f64], out: &mut [f64]) {
        let m = self.dimension;
        for (i, spec) in self.potentials.iter().enumerate() {
            let xi = &x[i * m..(i + 1) * m];
            let oi = &mut out[i * m..(i + 1) * m];
            spec.self_dynamics_into(xi, oi);
            for &(j, a) in graph.in_neighbors(i) {
                let xj = &x[j * m..(j + 1) * m];
                for k in 0..m {
                    oi[k] += gain * a * (xj[k] - xi[k]);
                }
            }
        }
    }
}

/// Stacked node states at one instant; node `i` occupies block `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub t: f64,
    pub x: Vec<f64>,
}

impl NetworkState {
    pub fn block(&self, i: usize, m: usize) -> &[f64] {
        &self.x[i * m..(i + 1) * m]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub gain: f64,
    pub dt: f64,
    pub scenario_id: Option<String>,
}

/// Samples at multiples of the sample spacing and at every switch instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<NetworkState>,
    pub meta: TrajectoryMeta,
    pub node_count: usize,
    pub dimension: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &NetworkState {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: f64,
    pub divergence_bound: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, sample_every: f64) -> Self {
        IntegratorConfig { dt, t_end, sample_every, divergence_bound: DEFAULT_DIVERGENCE_BOUND }
    }

    /// `dt = tau_D / 10`, sampling every ten steps.
    pub fn for_signal(signal: &SwitchingSignal, t_end: f64) -> Self {
        let dt = signal.dwell_floor() / 10.0;
        Self::new(dt, t_end, 10.0 * dt)
    }

    pub fn validate(&self, signal: &SwitchingSignal) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.sample_every > 0.0) {
            return Err(Error::Config("sample_every must be positive".into()));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::Config("divergence bound must be positive".into()));
        }
        let cap = signal.dwell_floor() / 4.0;
        if self.dt > cap * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} exceeds tau_D/4 = {cap}; at least four steps must fit in every dwell segment",
                self.dt
            )));
        }
        Ok(())
    }

    /// Sample instants `k * sample_every` in `[0, t_end]`.
    pub fn sample_times(&self) -> Vec<f64> {
        let count = (self.t_end / self.sample_every + 1e-9).floor() as usize;
        (0..=count).map(|k| k as f64 * self.sample_every).collect()
    }
}

/// Evaluates the vector field at `state`, using the graph active at `state.t`.
pub fn rhs(network: &Network, gain: f64, state: &NetworkState) -> Result<Vec<f64>> {
    check_gain(gain)?;
    check_dim(network.state_len(), state.x.len())?;
    let mut out = vec![0.0; state.x.len()];
    network.field_into(network.signal().graph_at(state.t), gain, &state.x, &mut out);
    Ok(out)
}

fn check_gain(gain: f64) -> Result<()> {
    if gain >= 0.0 && gain.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("coupling gain K must be nonnegative, got {gain}")))
    }
}

/// Instants at which a sample is recorded: the sample grid merged with the
/// switching instants in `(0, t_end]`. A switch within `1e-9 * sample_every`
/// of a grid point replaces that grid point.
pub fn event_times(signal: &SwitchingSignal, cfg: &IntegratorConfig) -> Vec<f64> {
    let mut events = cfg.sample_times();
    let grid_len = events.len();
    let tol = 1e-9 * cfg.sample_every;
    for s in signal.switch_times(0.0, cfg.t_end) {
        let k = (s / cfg.sample_every).round() as usize;
        if k < grid_len && (events[k] - s).abs() <= tol {
            events[k] = s;
        } else {
            events.push(s);
        }
    }
    events.sort_by(f64::total_cmp);
    events.dedup();
    events
}

/// Classical RK4 on each inter-event interval. Each interval is split into
/// equal steps no longer than `dt`, so steps end exactly on switch instants.
pub fn integrate(
    network: &Network,
    gain: f64,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_gain(gain)?;
    check_dim(network.state_len(), x0.len())?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    cfg.validate(network.signal())?;

    let events = event_times(network.signal(), cfg);
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut stage = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    let mut samples = Vec::with_capacity(events.len());
    samples.push(NetworkState { t: 0.0, x: x.clone() });

    for w in events.windows(2) {
        let (a, b) = (w[0], w[1]);
        let graph = network.signal().graph_at(0.5 * (a + b));
        let steps = ((b - a) / cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / steps as f64;
        for step in 0..steps {
            network.field_into(graph, gain, &x, &mut k1);
            for i in 0..n {
                stage[i] = x[i] + 0.5 * h * k1[i];
            }
            network.field_into(graph, gain, &stage, &mut k2);
            for i in 0..n {
                stage[i] = x[i] + 0.5 * h * k2[i];
            }
            network.field_into(graph, gain, &stage, &mut k3);
            for i in 0..n {
                stage[i] = x[i] + h * k3[i];
            }
            network.field_into(graph, gain, &stage, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let norm = inf_norm(&x);
            if x.iter().any(|v| !v.is_finite()) || norm > cfg.divergence_bound {
                return Err(Error::FiniteEscape {
                    t: a + (step + 1) as f64 * h,
                    norm: if norm.is_finite() { norm } else { f64::INFINITY },
                    bound: cfg.divergence_bound,
                });
            }
        }
        samples.push(NetworkState { t: b, x: x.clone() });
    }

    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta { gain, dt: cfg.dt, scenario_id: None },
        node_count: network.node_count(),
        dimension: network.dimension(),
    })
}

/// Unique equilibrium of the all-quadratic network on a fixed graph: solves
/// `(W + K (P kron I_m)) x = W c` with `W = diag(w_i kron I_m)` and `c` the
/// stacked centers.
pub fn equilibrium_oracle_quadratic(
    potentials: &[PotentialSpec],
    graph: &WeightedDigraph,
    gain: f64,
) -> Result<Vec<f64>> {
    check_gain(gain)?;
    if graph.node_count() != potentials.len() {
        return Err(Error::InvalidInput("graph and potential counts differ".into()));
    }
    let m = potentials.first().map(|p| p.dimension()).unwrap_or(0);
    let n = potentials.len();
    let size = n * m;
    let p = laplacian(graph);
    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for (i, spec) in potentials.iter().enumerate() {
        let PotentialKind::Quadratic { center, weight } = spec.kind() else {
            return Err(Error::Precondition("equilibrium oracle needs quadratic potentials".into()));
        };
        check_dim(m, center.len())?;
        for k in 0..m {
            a[(i * m + k, i * m + k)] += weight;
            rhs[i * m + k] = weight * center[k];
            for j in 0..n {
                a[(i * m + k, j * m + k)] += gain * p[(i, j)];
            }
        }
    }
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::Numerical {
        message: "equilibrium system is singular".into(),
        residual: f64::NAN,
    })?;
    Ok(sol.iter().copied().collect())
}
