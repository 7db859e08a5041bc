//! Weighted digraph snapshots, switching signals, joint graphs and the
//! connectivity and spectral quantities the synchronization results need.
//!
//! An arc `(j, i)` means node `j` is a neighbor of node `i`: information
//! flows from `j` to `i` and enters row `i` of the Laplacian.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;

/// A weighted arc `source -> target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl Arc {
    pub fn new(source: usize, target: usize, weight: f64) -> Self {
        Arc { source, target, weight }
    }
}

/// Global bounds `a_* <= a_ij <= a^*` on arc weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub lower: f64,
    pub upper: f64,
}

impl WeightBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight bounds must satisfy 0 < a_* <= a^* < inf, got [{lower}, {upper}]"
            )));
        }
        Ok(WeightBounds { lower, upper })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    node_count: usize,
    arcs: Vec<Arc>,
    // in_neighbors[i] = [(j, a_ij)]
    in_neighbors: Vec<Vec<(usize, f64)>>,
}

impl WeightedDigraph {
    pub fn new(node_count: usize, arcs: Vec<Arc>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidInput("graph needs at least one node".into()));
        }
        let mut seen = BTreeSet::new();
        let mut in_neighbors = vec![Vec::new(); node_count];
        for a in &arcs {
            if a.source >= node_count || a.target >= node_count {
                return Err(Error::InvalidInput(format!(
                    "arc {} -> {} references a node outside 0..{node_count}",
                    a.source, a.target
                )));
            }
            if a.source == a.target {
                return Err(Error::InvalidInput(format!("self-loop at node {}", a.source)));
            }
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "arc {} -> {} has non-positive weight {}",
                    a.source, a.target, a.weight
                )));
            }
            if !seen.insert((a.source, a.target)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate arc {} -> {}",
                    a.source, a.target
                )));
            }
            in_neighbors[a.target].push((a.source, a.weight));
        }
        Ok(WeightedDigraph { node_count, arcs, in_neighbors })
    }

    /// Builds a graph with both `(j, i)` and `(i, j)` for every edge.
    pub fn undirected(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let arcs = edges
            .iter()
            .flat_map(|&(a, b, w)| [Arc::new(a, b, w), Arc::new(b, a, w)])
            .collect();
        Self::new(node_count, arcs)
    }

    pub fn empty(node_count: usize) -> Result<Self> {
        Self::new(node_count, Vec::new())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Neighbors `j` of node `i` with their weights `a_ij`.
    pub fn in_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.in_neighbors[i]
    }

    pub fn check_weight_bounds(&self, bounds: &WeightBounds) -> Result<()> {
        for a in &self.arcs {
            if a.weight < bounds.lower {
                return Err(Error::InvalidInput(format!(
                    "weight below a_*: arc {} -> {} has weight {} < {}",
                    a.source, a.target, a.weight, bounds.lower
                )));
            }
            if a.weight > bounds.upper {
                return Err(Error::InvalidInput(format!(
                    "weight above a^*: arc {} -> {} has weight {} > {}",
                    a.source, a.target, a.weight, bounds.upper
                )));
            }
        }
        Ok(())
    }

    /// True when every arc has a reverse arc of equal weight.
    pub fn is_symmetric(&self) -> bool {
        let weights: BTreeMap<(usize, usize), f64> =
            self.arcs.iter().map(|a| ((a.source, a.target), a.weight)).collect();
        self.arcs
            .iter()
            .all(|a| weights.get(&(a.target, a.source)) == Some(&a.weight))
    }

    pub fn arc_set(&self) -> BTreeSet<(usize, usize)> {
        self.arcs.iter().map(|a| (a.source, a.target)).collect()
    }
}

/// `P = D - A` with `[A]_ij = a_ij` for each neighbor `j` of `i`.
pub fn laplacian(g: &WeightedDigraph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut p = DMatrix::zeros(n, n);
    for a in g.arcs() {
        p[(a.target, a.source)] -= a.weight;
        p[(a.target, a.target)] += a.weight;
    }
    p
}

/// Strong connectivity of an arc set by forward and backward reachability
/// from node 0.
pub fn strongly_connected_arcs(node_count: usize, arcs: &BTreeSet<(usize, usize)>) -> bool {
    if node_count <= 1 {
        return true;
    }
    let mut out_adj = vec![Vec::new(); node_count];
    let mut in_adj = vec![Vec::new(); node_count];
    for &(s, t) in arcs {
        out_adj[s].push(t);
        in_adj[t].push(s);
    }
    reaches_all(&out_adj) && reaches_all(&in_adj)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adj.len()
}

pub fn is_strongly_connected(g: &WeightedDigraph) -> bool {
    strongly_connected_arcs(g.node_count(), &g.arc_set())
}

/// Connectivity of the graph with arc directions ignored.
pub fn is_weakly_connected(g: &WeightedDigraph) -> bool {
    let arcs: BTreeSet<(usize, usize)> = g
        .arcs()
        .iter()
        .flat_map(|a| [(a.source, a.target), (a.target, a.source)])
        .collect();
    strongly_connected_arcs(g.node_count(), &arcs)
}

/// Second-smallest Laplacian eigenvalue of a symmetric connected graph.
pub fn lambda2(g: &WeightedDigraph) -> Result<f64> {
    if g.node_count() < 2 {
        return Err(Error::Precondition("lambda2 needs at least two nodes".into()));
    }
    if !g.is_symmetric() {
        return Err(Error::Precondition("lambda2 needs a symmetric graph".into()));
    }
    if !is_strongly_connected(g) {
        return Err(Error::Precondition("lambda2 needs a connected graph".into()));
    }
    let eig = symmetric_eigenvalues(&laplacian(g))?;
    Ok(eig[1])
}

/// One piece of a periodic schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub graph: String,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Fixed(String),
    Periodic(Vec<Segment>),
}

/// A half-open interval `[start, end)` during which one graph is active.
#[derive(Debug, Clone, Copy)]
pub struct ActiveSpan<'a> {
    pub start: f64,
    pub end: f64,
    pub graph: &'a WeightedDigraph,
}

/// Piecewise-constant graph schedule `sigma(t)`, right-continuous at switches.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    library: BTreeMap<String, WeightedDigraph>,
    schedule: Schedule,
    dwell_floor: f64,
    // Segment start offsets within one period plus the period itself.
    offsets: Vec<f64>,
    segment_graphs: Vec<String>,
}

impl SwitchingSignal {
    pub fn new(
        library: BTreeMap<String, WeightedDigraph>,
        schedule: Schedule,
        dwell_floor: f64,
    ) -> Result<Self> {
        if !(dwell_floor > 0.0 && dwell_floor.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dwell floor must be positive, got {dwell_floor}"
            )));
        }
        let n = library
            .values()
            .next()
            .ok_or_else(|| Error::InvalidInput("graph library is empty".into()))?
            .node_count();
        if let Some((id, _)) = library.iter().find(|(_, g)| g.node_count() != n) {
            return Err(Error::InvalidInput(format!(
                "graph '{id}' has a different node count than the rest of the library"
            )));
        }
        let resolve = |id: &str| -> Result<()> {
            if library.contains_key(id) {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("schedule references unknown graph '{id}'")))
            }
        };
        let (offsets, segment_graphs) = match &schedule {
            Schedule::Fixed(id) => {
                resolve(id)?;
                (vec![0.0, f64::INFINITY], vec![id.clone()])
            }
            Schedule::Periodic(segments) => {
                if segments.is_empty() {
                    return Err(Error::InvalidInput("periodic schedule has no segments".into()));
                }
                let mut offsets = vec![0.0];
                for (k, s) in segments.iter().enumerate() {
                    resolve(&s.graph)?;
                    if !(s.duration.is_finite() && s.duration >= dwell_floor) {
                        return Err(Error::InvalidInput(format!(
                            "segment {k} duration {} is below the dwell floor {dwell_floor}",
                            s.duration
                        )));
                    }
                    offsets.push(offsets[k] + s.duration);
                }
                (offsets, segments.iter().map(|s| s.graph.clone()).collect())
            }
        };
        Ok(SwitchingSignal { library, schedule, dwell_floor, offsets, segment_graphs })
    }

    /// A signal that never switches.
    pub fn fixed(graph: WeightedDigraph) -> Self {
        let library = BTreeMap::from([("g".to_string(), graph)]);
        Self::new(library, Schedule::Fixed("g".into()), 1.0).expect("single-graph signal is valid")
    }

    /// A fixed signal with an explicit dwell floor (it bounds the step size).
    pub fn fixed_with_dwell(graph: WeightedDigraph, dwell_floor: f64) -> Result<Self> {
        let library = BTreeMap::from([("g".to_string(), graph)]);
        Self::new(library, Schedule::Fixed("g".into()), dwell_floor)
    }

    /// Periodic repetition of `(graph, duration)` pieces.
    pub fn periodic(pieces: Vec<(WeightedDigraph, f64)>, dwell_floor: f64) -> Result<Self> {
        let mut library = BTreeMap::new();
        let mut segments = Vec::new();
        for (k, (g, d)) in pieces.into_iter().enumerate() {
            let id = format!("g{k}");
            library.insert(id.clone(), g);
            segments.push(Segment { graph: id, duration: d });
        }
        Self::new(library, Schedule::Periodic(segments), dwell_floor)
    }

    pub fn library(&self) -> &BTreeMap<String, WeightedDigraph> {
        &self.library
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn dwell_floor(&self) -> f64 {
        self.dwell_floor
    }

    pub fn node_count(&self) -> usize {
        self.library.values().next().map(|g| g.node_count()).unwrap_or(0)
    }

    /// Schedule period; infinite for a fixed schedule.
    pub fn period(&self) -> f64 {
        *self.offsets.last().expect("offsets nonempty")
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.schedule, Schedule::Fixed(_))
    }

    fn segment_graph(&self, idx: usize) -> &WeightedDigraph {
        &self.library[&self.segment_graphs[idx]]
    }

    /// The graph active at time `t` (the post-switch graph at a switch).
    pub fn graph_at(&self, t: f64) -> &WeightedDigraph {
        if self.is_fixed() {
            return self.segment_graph(0);
        }
        let period = self.period();
        let mut phase = t.rem_euclid(period);
        let snap = 1e-12 * t.abs().max(1.0);
        if period - phase <= snap {
            phase = 0.0;
        }
        let segments = self.segment_graphs.len();
        let mut idx = segments - 1;
        for k in 0..segments {
            if phase < self.offsets[k + 1] - snap {
                idx = k;
                break;
            }
        }
        self.segment_graph(idx)
    }

    /// Active spans covering `[t0, t1)`, clipped to the window, in order.
    pub fn spans(&self, t0: f64, t1: f64) -> Vec<ActiveSpan<'_>> {
        if t1 <= t0 {
            return Vec::new();
        }
        if self.is_fixed() {
            return vec![ActiveSpan { start: t0, end: t1, graph: self.segment_graph(0) }];
        }
        let period = self.period();
        let segments = self.segment_graphs.len();
        let mut out = Vec::new();
        let mut cycle = (t0 / period).floor() - 1.0;
        loop {
            let base = cycle * period;
            if base >= t1 {
                break;
            }
            for k in 0..segments {
                let start = base + self.offsets[k];
                let end = base + self.offsets[k + 1];
                if start < t1 && end > t0 {
                    out.push(ActiveSpan {
                        start: start.max(t0),
                        end: end.min(t1),
                        graph: self.segment_graph(k),
                    });
                }
            }
            cycle += 1.0;
        }
        out
    }

    /// Switching instants in `(t0, t1]`.
    pub fn switch_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        if self.is_fixed() || t1 <= t0 {
            return Vec::new();
        }
        let period = self.period();
        let segments = self.segment_graphs.len();
        let mut out = Vec::new();
        let mut cycle = (t0 / period).floor() - 1.0;
        loop {
            let base = cycle * period;
            if base > t1 {
                break;
            }
            for k in 1..=segments {
                let s = base + self.offsets[k];
                if s > t0 && s <= t1 && out.last().is_none_or(|&l: &f64| l < s) {
                    out.push(s);
                }
            }
            cycle += 1.0;
        }
        out
    }
}

/// Arc union over a half-open time window; weights are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGraph {
    pub window: (f64, f64),
    pub node_count: usize,
    pub arcs: BTreeSet<(usize, usize)>,
}

impl JointGraph {
    pub fn is_strongly_connected(&self) -> bool {
        strongly_connected_arcs(self.node_count, &self.arcs)
    }
}

pub fn joint_graph(signal: &SwitchingSignal, t1: f64, t2: f64) -> Result<JointGraph> {
    if !(t1 < t2) {
        return Err(Error::InvalidInput(format!("joint graph window needs t1 < t2, got [{t1}, {t2})")));
    }
    let mut arcs = BTreeSet::new();
    for span in signal.spans(t1, t2) {
        arcs.extend(span.graph.arc_set());
    }
    Ok(JointGraph { window: (t1, t2), node_count: signal.node_count(), arcs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UjscCertificate {
    pub holds: bool,
    pub window_length: f64,
    pub windows_checked: usize,
    /// First window whose joint graph is not strongly connected.
    pub failing_window: Option<(f64, f64)>,
}

/// Checks that every window `[t, t + T)` has a strongly connected joint graph.
///
/// For a periodic schedule the joint graph, as a function of `t`, only
/// changes when `t` or `t + T` crosses a switching instant, so checking each
/// such breakpoint within one period plus the midpoints between consecutive
/// breakpoints is exhaustive.
pub fn certify_ujsc(signal: &SwitchingSignal, window: f64, horizon: f64) -> Result<UjscCertificate> {
    if !(window > 0.0) {
        return Err(Error::InvalidInput("window length T must be positive".into()));
    }
    if signal.is_fixed() {
        let holds = joint_graph(signal, 0.0, window)?.is_strongly_connected();
        return Ok(UjscCertificate {
            holds,
            window_length: window,
            windows_checked: 1,
            failing_window: (!holds).then_some((0.0, window)),
        });
    }
    let period = signal.period();
    if horizon < period + window {
        return Err(Error::Precondition(format!(
            "horizon {horizon} must cover one period ({period}) plus the window ({window})"
        )));
    }
    let mut breaks: Vec<f64> = Vec::new();
    for &s in &signal.offsets[..signal.offsets.len() - 1] {
        breaks.push(s);
        breaks.push((s - window).rem_euclid(period));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * period);
    let mut starts = Vec::with_capacity(breaks.len() * 2);
    for (k, &b) in breaks.iter().enumerate() {
        starts.push(b);
        let next = breaks.get(k + 1).copied().unwrap_or(breaks[0] + period);
        starts.push(0.5 * (b + next));
    }
    for (k, &t) in starts.iter().enumerate() {
        if !joint_graph(signal, t, t + window)?.is_strongly_connected() {
            return Ok(UjscCertificate {
                holds: false,
                window_length: window,
                windows_checked: k + 1,
                failing_window: Some((t, t + window)),
            });
        }
    }
    Ok(UjscCertificate {
        holds: true,
        window_length: window,
        windows_checked: starts.len(),
        failing_window: None,
    })
}

/// Standard topologies used by the test scenarios.
pub mod topology {
    use super::{Arc, WeightedDigraph};
    use crate::error::Result;

    pub fn path(n: usize, w: f64) -> Result<WeightedDigraph> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, w)).collect();
        WeightedDigraph::undirected(n, &edges)
    }

    pub fn ring(n: usize, w: f64) -> Result<WeightedDigraph> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, w)).collect();
        WeightedDigraph::undirected(n, &edges)
    }

    pub fn star(n: usize, w: f64) -> Result<WeightedDigraph> {
        let edges: Vec<_> = (1..n).map(|i| (0, i, w)).collect();
        WeightedDigraph::undirected(n, &edges)
    }

    pub fn complete(n: usize, w: f64) -> Result<WeightedDigraph> {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j, w)))
            .collect();
        WeightedDigraph::undirected(n, &edges)
    }

    /// Undirected tree where node `k + 1` hangs off `parents[k]`.
    pub fn tree(parents: &[usize], w: f64) -> Result<WeightedDigraph> {
        let edges: Vec<_> = parents.iter().enumerate().map(|(k, &p)| (p, k + 1, w)).collect();
        WeightedDigraph::undirected(parents.len() + 1, &edges)
    }

    /// Directed chain visiting `order[0] -> order[1] -> ...`.
    pub fn directed_chain(n: usize, order: &[usize], w: f64) -> Result<WeightedDigraph> {
        let arcs = order.windows(2).map(|p| Arc::new(p[0], p[1], w)).collect();
        WeightedDigraph::new(n, arcs)
    }
}
