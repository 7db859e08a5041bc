//! Scenario files: JSON, schema version 1.
//!
//! ```json
//! {
//!   "version": 1,
//!   "id": "two-node",
//!   "nodes": [
//!     {"kind": "quadratic", "center": [0.0]},
//!     {"kind": "quadratic", "center": [1.0]}
//!   ],
//!   "graphs": {"g": [[0, 1, 1.0], [1, 0, 1.0]]},
//!   "signal": {"kind": "fixed", "graph": "g"},
//!   "K": 1.0,
//!   "x0": [0.0, 0.0],
//!   "t_end": 10.0,
//!   "checks": [{"name": "sync", "tol": 1e-6}]
//! }
//! ```
//!
//! An edge triple `[j, i, w]` makes node `j` a neighbor of node `i` with
//! weight `w` (0-based indices).

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use syncflow::analysis::common_zero_set;
use syncflow::graphs::{is_strongly_connected, Arc, Schedule, Segment};
use syncflow::simulator::{IntegratorConfig, DEFAULT_DIVERGENCE_BOUND};
use syncflow::{Network, PotentialSpec, SwitchingSignal, WeightBounds, WeightedDigraph};

use crate::checks::CheckSpec;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub version: u32,
    #[serde(default)]
    pub id: Option<String>,
    pub nodes: Vec<PotentialSpec>,
    pub graphs: BTreeMap<String, Vec<(usize, usize, f64)>>,
    pub signal: RawSignal,
    #[serde(default)]
    pub weight_bounds: Option<(f64, f64)>,
    #[serde(rename = "K")]
    pub gain: GainSpec,
    pub x0: InitialState,
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub sample_every: Option<f64>,
    #[serde(default)]
    pub divergence_bound: Option<f64>,
    #[serde(default)]
    pub tail_fraction: Option<f64>,
    /// Reference point for the V series; the centroid of the common zero set when absent.
    #[serde(default)]
    pub z_star: Option<Vec<f64>>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawSignal {
    Fixed {
        graph: String,
        #[serde(default)]
        dwell_floor: Option<f64>,
    },
    Periodic { segments: Vec<Segment>, dwell_floor: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    One(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Explicit(Vec<f64>),
    /// `"grid"`: node `i` at `-1 + 2i/(N-1)` in every coordinate.
    Named(String),
    Random { random: RandomInit },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInit {
    pub seed: u64,
    #[serde(default = "default_low")]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
}

fn default_low() -> f64 {
    -1.0
}

fn default_high() -> f64 {
    1.0
}

const DEFAULT_FIXED_DWELL: f64 = 1.0;
const DEFAULT_TAIL_FRACTION: f64 = 0.2;

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub network: Network,
    pub weight_bounds: WeightBounds,
    /// Coupling gains; the first one drives the trajectory and its checks.
    pub gains: Vec<f64>,
    /// True when the file gave a list of gains.
    pub gain_list: bool,
    pub x0: Vec<f64>,
    pub config: IntegratorConfig,
    pub tail_fraction: f64,
    pub z_star: Option<Vec<f64>>,
    pub checks: Vec<CheckSpec>,
}

impl Scenario {
    pub fn gain(&self) -> f64 {
        self.gains[0]
    }

    pub fn node_count(&self) -> usize {
        self.network.node_count()
    }

    pub fn dimension(&self) -> usize {
        self.network.dimension()
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    parse_scenario(&text, path)
}

/// Parses and validates scenario text; `path` only labels error messages.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Parse { path: path.to_path_buf(), message: format!("field `{field}`: {}", e.inner()) }
    })?;
    let fallback_id = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    validate(raw, fallback_id)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

pub fn validate(raw: RawScenario, fallback_id: String) -> Result<Scenario> {
    if raw.version != SCHEMA_VERSION {
        return Err(invalid(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", raw.version)));
    }
    let n = raw.nodes.len();
    if n == 0 {
        return Err(invalid("scenario has no nodes"));
    }
    let m = raw.nodes[0].dimension();
    if let Some(i) = raw.nodes.iter().position(|p| p.dimension() != m) {
        return Err(invalid(format!("node {i} has dimension {}, node 0 has {m}", raw.nodes[i].dimension())));
    }

    let weight_bounds = match raw.weight_bounds {
        Some((lo, hi)) => WeightBounds::new(lo, hi).map_err(|e| invalid(format!("weight_bounds: {e}")))?,
        None => WeightBounds::new(f64::MIN_POSITIVE, f64::MAX)?,
    };
    let mut library = BTreeMap::new();
    for (id, triples) in &raw.graphs {
        for (k, &(j, i, w)) in triples.iter().enumerate() {
            if !(w >= weight_bounds.lower) {
                return Err(invalid(format!("graph `{id}` edge {k}: weight below a_* ({w} < {})", weight_bounds.lower)));
            }
            if w > weight_bounds.upper {
                return Err(invalid(format!("graph `{id}` edge {k}: weight above a^* ({w} > {})", weight_bounds.upper)));
            }
            if j >= n || i >= n {
                return Err(invalid(format!("graph `{id}` edge {k}: node index out of range for {n} nodes")));
            }
        }
        let arcs = triples.iter().map(|&(j, i, w)| Arc::new(j, i, w)).collect();
        let g = WeightedDigraph::new(n, arcs).map_err(|e| invalid(format!("graph `{id}`: {e}")))?;
        library.insert(id.clone(), g);
    }

    let (schedule, dwell) = match raw.signal {
        RawSignal::Fixed { graph, dwell_floor } => (Schedule::Fixed(graph), dwell_floor.unwrap_or(DEFAULT_FIXED_DWELL)),
        RawSignal::Periodic { segments, dwell_floor } => (Schedule::Periodic(segments), dwell_floor),
    };
    let signal = SwitchingSignal::new(library, schedule, dwell).map_err(|e| invalid(format!("signal: {e}")))?;
    let network = Network::new(raw.nodes, signal)?;

    let (gains, gain_list) = match raw.gain {
        GainSpec::One(k) => (vec![k], false),
        GainSpec::List(ks) => (ks, true),
    };
    if gains.is_empty() {
        return Err(invalid("K list is empty"));
    }
    if let Some(k) = gains.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        return Err(invalid(format!("K must be a nonnegative number, got {k}")));
    }
    if gain_list {
        validate_gain_list(&gains)?;
    }

    let x0 = initial_state(&raw.x0, n, m)?;
    let dt = raw.dt.unwrap_or(dwell / 10.0);
    let mut config = IntegratorConfig::new(dt, raw.t_end, raw.sample_every.unwrap_or(10.0 * dt));
    config.divergence_bound = raw.divergence_bound.unwrap_or(DEFAULT_DIVERGENCE_BOUND);
    config.validate(network.signal()).map_err(|e| invalid(e.to_string()))?;

    let tail_fraction = raw.tail_fraction.unwrap_or(DEFAULT_TAIL_FRACTION);
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(invalid(format!("tail_fraction must lie in (0, 1], got {tail_fraction}")));
    }
    if let Some(z) = &raw.z_star {
        if z.len() != m {
            return Err(invalid(format!("z_star has {} entries, nodes have dimension {m}", z.len())));
        }
    }

    let scenario = Scenario {
        id: raw.id.unwrap_or(fallback_id),
        network,
        weight_bounds,
        gains,
        gain_list,
        x0,
        config,
        tail_fraction,
        z_star: raw.z_star,
        checks: raw.checks,
    };
    for check in &scenario.checks {
        check_preconditions(check, &scenario)?;
    }
    Ok(scenario)
}

/// A K list for a sweep: nonempty, positive and strictly increasing.
pub fn validate_gain_list(gains: &[f64]) -> Result<()> {
    if gains.is_empty() {
        return Err(invalid("K list is empty"));
    }
    if gains.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
        return Err(invalid("K list entries must be positive"));
    }
    if gains.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("K list must be strictly increasing"));
    }
    Ok(())
}

fn initial_state(spec: &InitialState, n: usize, m: usize) -> Result<Vec<f64>> {
    let x0 = match spec {
        InitialState::Explicit(v) => v.clone(),
        InitialState::Named(name) if name == "grid" => (0..n)
            .flat_map(|i| {
                let v = if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 };
                std::iter::repeat_n(v, m)
            })
            .collect(),
        InitialState::Named(name) => return Err(invalid(format!("unknown x0 generator `{name}`"))),
        InitialState::Random { random } => {
            if !(random.low < random.high) {
                return Err(invalid("x0.random needs low < high"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(random.seed);
            (0..n * m).map(|_| rng.gen_range(random.low..random.high)).collect()
        }
    };
    if x0.len() != n * m {
        return Err(invalid(format!("x0 has {} entries, expected N*m = {}", x0.len(), n * m)));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x0 entries must be finite"));
    }
    Ok(x0)
}

fn fixed_undirected(s: &Scenario, check: &str) -> Result<()> {
    let signal = s.network.signal();
    let g = signal.graph_at(0.0);
    if !signal.is_fixed() || !g.is_symmetric() || !is_strongly_connected(g) {
        return Err(invalid(format!("check `{check}` needs a fixed, undirected, connected graph")));
    }
    Ok(())
}

fn check_preconditions(check: &CheckSpec, s: &Scenario) -> Result<()> {
    match check {
        CheckSpec::Theorem1 { .. } => fixed_undirected(s, "theorem1"),
        CheckSpec::SpectralBound { .. } => {
            fixed_undirected(s, "spectral_bound")?;
            if s.gain() <= 0.0 {
                return Err(invalid("check `spectral_bound` needs K > 0"));
            }
            Ok(())
        }
        CheckSpec::InvariantCube { eta } => {
            if s.dimension() != 1 {
                return Err(invalid("check `invariant_cube` needs one-dimensional nodes"));
            }
            if !(*eta >= 0.0) {
                return Err(invalid("check `invariant_cube` needs eta >= 0"));
            }
            Ok(())
        }
        CheckSpec::MonotoneV { .. } | CheckSpec::CommonLimit { .. } => {
            if s.z_star.is_none() && common_zero_set(s.network.potentials())?.is_none() {
                return Err(invalid(format!(
                    "check `{}` needs a common zero set or an explicit z_star",
                    check.name()
                )));
            }
            Ok(())
        }
        CheckSpec::EpsilonSync { epsilon } => {
            if !(*epsilon > 0.0) {
                return Err(invalid("check `epsilon_sync` needs epsilon > 0"));
            }
            if s.gains.iter().any(|k| *k <= 0.0) {
                return Err(invalid("check `epsilon_sync` needs positive gains"));
            }
            Ok(())
        }
        CheckSpec::Ujsc { window, horizon } => {
            if !(*window > 0.0) {
                return Err(invalid("check `ujsc` needs window > 0"));
            }
            if let Some(h) = horizon {
                let period = s.network.signal().period();
                if !s.network.signal().is_fixed() && *h < period + window {
                    return Err(invalid("check `ujsc` horizon must cover one period plus the window"));
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "nodes": [{"kind": "quadratic", "center": [0.0]}, {"kind": "quadratic", "center": [1.0]}],
        "graphs": {"g": [[0, 1, 1.0], [1, 0, 1.0]]},
        "signal": {"kind": "fixed", "graph": "g"},
        "K": 1.0,
        "x0": [0.0, 0.0],
        "t_end": 5.0
    }"#;

    fn parse(text: &str) -> Result<Scenario> {
        parse_scenario(text, Path::new("minimal.json"))
    }

    fn with(field: &str, value: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v[field] = serde_json::from_str(value).unwrap();
        v.to_string()
    }

    #[test]
    fn minimal_two_node_scenario() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.dimension(), 1);
        assert_eq!(s.id, "minimal");
        assert_eq!(s.gains, vec![1.0]);
        assert!(!s.gain_list);
        // defaults follow the dwell floor of a fixed signal
        assert!((s.config.dt - 0.1).abs() < 1e-15);
        assert!((s.config.sample_every - 1.0).abs() < 1e-15);
        assert_eq!(s.tail_fraction, 0.2);
    }

    #[test]
    fn zero_weight_is_below_the_floor() {
        let err = parse(&with("graphs", r#"{"g": [[0, 1, 0.0]]}"#)).unwrap_err();
        assert!(err.to_string().contains("weight below a_*"), "{err}");
        let err = parse(&with("weight_bounds", "[0.5, 2.0]").replace("[1,0,1.0]", "[1,0,3.0]")).unwrap_err();
        assert!(err.to_string().contains("weight above a^*"), "{err}");
    }

    #[test]
    fn short_segment_violates_dwell_floor() {
        let text = with(
            "signal",
            r#"{"kind": "periodic", "segments": [{"graph": "g", "duration": 0.2}], "dwell_floor": 0.5}"#,
        );
        let err = parse(&text).unwrap_err();
        assert_eq!(err.exit_status(), crate::ExitStatus::InputError);
        assert!(err.to_string().contains("dwell"), "{err}");
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let text = MINIMAL.replace(r#""center": [1.0]"#, r#""center": "one""#);
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("nodes[1]"), "{err}");
        assert!(err.contains("line 3"), "{err}");
        let err = parse(&with("t_end", r#""soon""#)).unwrap_err().to_string();
        assert!(err.contains("t_end"), "{err}");
    }

    #[test]
    fn unknown_fields_and_graphs_are_rejected() {
        assert!(parse(&with("colour", "1")).is_err());
        let err = parse(&with("signal", r#"{"kind": "fixed", "graph": "h"}"#)).unwrap_err();
        assert!(err.to_string().contains('h'), "{err}");
        assert!(parse(&with("version", "2")).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn initial_state_generators() {
        let s = parse(&with("x0", r#""grid""#)).unwrap();
        assert_eq!(s.x0, vec![-1.0, 1.0]);
        let a = parse(&with("x0", r#"{"random": {"seed": 3, "low": 2.0, "high": 5.0}}"#)).unwrap();
        let b = parse(&with("x0", r#"{"random": {"seed": 3, "low": 2.0, "high": 5.0}}"#)).unwrap();
        assert_eq!(a.x0, b.x0);
        assert!(a.x0.iter().all(|v| (2.0..5.0).contains(v)));
        assert!(parse(&with("x0", "[1.0]")).is_err());
        assert!(parse(&with("x0", r#""spiral""#)).is_err());
    }

    #[test]
    fn gain_lists_must_increase() {
        let s = parse(&with("K", "[1, 2, 4]")).unwrap();
        assert!(s.gain_list);
        assert!(parse(&with("K", "[2, 1]")).is_err());
        assert!(parse(&with("K", "[]")).is_err());
        assert!(parse(&with("K", "-1")).is_err());
    }

    #[test]
    fn checks_are_validated_against_the_scenario() {
        let directed = with("graphs", r#"{"g": [[0, 1, 1.0]]}"#);
        let mut v: serde_json::Value = serde_json::from_str(&directed).unwrap();
        v["checks"] = serde_json::json!([{"name": "spectral_bound"}]);
        let err = parse(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("undirected"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["checks"] = serde_json::json!([{"name": "monotone_v"}]);
        assert!(parse(&v.to_string()).is_err());
        v["z_star"] = serde_json::json!([0.5]);
        assert!(parse(&v.to_string()).is_ok());

        v["checks"] = serde_json::json!([{"name": "no_such_check"}]);
        assert!(parse(&v.to_string()).is_err());
    }
}
