//! Time-evolving network state.
//!
//! A [`DynamicNetwork`] only ever grows: every node and edge carries the time
//! of the event that created it, so any earlier state can be rebuilt from the
//! birth times with [`snapshot_at`]. Node labels are dense `u32` indices
//! handed out in arrival order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::MIN_SEPARATION;

/// Dense node label, assigned in arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected edge, stored with the smaller label first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: NodeId,
    hi: NodeId,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Result<Self, NetworkError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Ok(Edge { lo: b, hi: a }),
            std::cmp::Ordering::Equal => Err(NetworkError::SelfLoop(a)),
        }
    }

    /// Panics on a self-loop. For call sites that already know `a != b`.
    pub fn between(a: u32, b: u32) -> Self {
        Edge::new(NodeId(a), NodeId(b)).expect("self-loop")
    }

    pub fn lo(self) -> NodeId {
        self.lo
    }

    pub fn hi(self) -> NodeId {
        self.hi
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// The nodes and edges added to the network at a single event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mark {
    pub new_nodes: Vec<NodeId>,
    pub new_edges: Vec<Edge>,
}

impl Mark {
    /// Builds a mark with nodes and edges in canonical (sorted) order.
    pub fn new(mut new_nodes: Vec<NodeId>, mut new_edges: Vec<Edge>) -> Self {
        new_nodes.sort_unstable();
        new_edges.sort_unstable();
        Mark { new_nodes, new_edges }
    }

    pub fn is_empty(&self) -> bool {
        self.new_nodes.is_empty() && self.new_edges.is_empty()
    }
}

/// One point of a realization: an event time and the mark attached to it.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub mark: Mark,
}

impl EventRecord {
    pub fn new(time: f64, mark: Mark) -> Self {
        EventRecord { time, mark }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("edge {0} already present")]
    DuplicateEdge(Edge),
    #[error("edge endpoint {0} is neither an existing nor a new node")]
    UnknownEndpoint(NodeId),
    #[error("event time {time} is not after the last event time {last}")]
    NonMonotoneTime { time: f64, last: f64 },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("new node labels must be dense: expected {expected}, found {found}")]
    NonDenseNode { expected: NodeId, found: NodeId },
    #[error("unknown statistic `{0}`")]
    UnknownStatistic(String),
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("events are not strictly increasing in time at index {index}")]
    UnsortedEvents { index: usize },
}

/// Grow-only undirected simple graph with per-node and per-edge birth times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynamicNetwork {
    node_birth: Vec<f64>,
    edge_birth: BTreeMap<Edge, f64>,
    // sorted neighbour lists; the degree of a node is the list length
    adjacency: Vec<Vec<u32>>,
    last_edge: Vec<Option<f64>>,
    last_event: Option<f64>,
}

impl DynamicNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replays a full event list.
    pub fn from_events(events: &[EventRecord]) -> Result<Self, NetworkError> {
        let mut net = DynamicNetwork::new();
        for ev in events {
            net.apply_mark(ev.time, &ev.mark)?;
        }
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.node_birth.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_birth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_birth.is_empty()
    }

    /// Time of the most recent event applied, including events with empty marks.
    pub fn last_event_time(&self) -> Option<f64> {
        self.last_event
    }

    /// Degree of `i`; labels beyond the current node count are treated as
    /// pending new nodes with degree 0.
    #[inline]
    pub fn degree(&self, i: NodeId) -> usize {
        self.adjacency.get(i.index()).map_or(0, Vec::len)
    }

    #[inline]
    pub fn neighbors(&self, i: NodeId) -> &[u32] {
        self.adjacency.get(i.index()).map_or(&[], Vec::as_slice)
    }

    pub fn node_birth(&self, i: NodeId) -> Option<f64> {
        self.node_birth.get(i.index()).copied()
    }

    pub fn edge_birth(&self, e: Edge) -> Option<f64> {
        self.edge_birth.get(&e).copied()
    }

    /// Time of the last edge involving `i`, or `None` if `i` is isolated.
    pub fn last_edge_time(&self, i: NodeId) -> Option<f64> {
        self.last_edge.get(i.index()).copied().flatten()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        let (a, b) = if self.degree(a) <= self.degree(b) { (a, b) } else { (b, a) };
        self.neighbors(a).binary_search(&b.0).is_ok()
    }

    /// Number of common neighbours of `a` and `b`.
    pub fn common_neighbors(&self, a: NodeId, b: NodeId) -> usize {
        let (x, y) = (self.neighbors(a), self.neighbors(b));
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.edge_birth.iter().map(|(e, t)| (*e, *t))
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Checks `m` against the current state without modifying it.
    pub fn check_mark(&self, t: f64, m: &Mark) -> Result<(), NetworkError> {
        if !t.is_finite() || t < 0.0 {
            return Err(NetworkError::NonMonotoneTime { time: t, last: self.last_event.unwrap_or(0.0) });
        }
        if let Some(last) = self.last_event {
            if t - last < MIN_SEPARATION {
                return Err(NetworkError::NonMonotoneTime { time: t, last });
            }
        }
        let n = self.node_count() as u32;
        for (k, node) in m.new_nodes.iter().enumerate() {
            let expected = NodeId(n + k as u32);
            if *node != expected {
                return Err(NetworkError::NonDenseNode { expected, found: *node });
            }
        }
        let limit = n + m.new_nodes.len() as u32;
        let mut seen = HashSet::with_capacity(m.new_edges.len());
        for &e in &m.new_edges {
            for end in [e.lo, e.hi] {
                if end.0 >= limit {
                    return Err(NetworkError::UnknownEndpoint(end));
                }
            }
            if !seen.insert(e) || self.edge_birth.contains_key(&e) {
                return Err(NetworkError::DuplicateEdge(e));
            }
        }
        Ok(())
    }

    /// Adds the nodes and edges of `m` with birth time `t`. Either the whole
    /// mark is applied or, on error, nothing changes.
    pub fn apply_mark(&mut self, t: f64, m: &Mark) -> Result<(), NetworkError> {
        self.check_mark(t, m)?;
        for _ in &m.new_nodes {
            self.node_birth.push(t);
            self.adjacency.push(Vec::new());
            self.last_edge.push(None);
        }
        for &e in &m.new_edges {
            self.edge_birth.insert(e, t);
            let (a, b) = (e.lo.0, e.hi.0);
            insert_sorted(&mut self.adjacency[a as usize], b);
            insert_sorted(&mut self.adjacency[b as usize], a);
            self.last_edge[a as usize] = Some(t);
            self.last_edge[b as usize] = Some(t);
        }
        self.last_event = Some(t);
        Ok(())
    }

    /// Copy-on-write variant of [`apply_mark`](Self::apply_mark).
    pub fn with_mark(&self, t: f64, m: &Mark) -> Result<Self, NetworkError> {
        let mut next = self.clone();
        next.apply_mark(t, m)?;
        Ok(next)
    }

    /// Rebuilds an event list from birth times. Events whose mark was empty
    /// leave no trace in the network and are not recovered.
    pub fn to_events(&self) -> Vec<EventRecord> {
        let mut by_time: BTreeMap<u64, (f64, Mark)> = BTreeMap::new();
        // birth times are non-negative, so bit order matches numeric order
        for (i, &t) in self.node_birth.iter().enumerate() {
            by_time.entry(t.to_bits()).or_insert_with(|| (t, Mark::default())).1.new_nodes.push(NodeId(i as u32));
        }
        for (&e, &t) in &self.edge_birth {
            by_time.entry(t.to_bits()).or_insert_with(|| (t, Mark::default())).1.new_edges.push(e);
        }
        by_time
            .into_values()
            .map(|(t, m)| EventRecord::new(t, Mark::new(m.new_nodes, m.new_edges)))
            .collect()
    }
}

fn insert_sorted(v: &mut Vec<u32>, x: u32) {
    let pos = v.binary_search(&x).unwrap_or_else(|p| p);
    v.insert(pos, x);
}

/// Checks that event times are strictly increasing.
pub fn check_sorted(events: &[EventRecord]) -> Result<(), NetworkError> {
    for (i, w) in events.windows(2).enumerate() {
        if !(w[1].time - w[0].time >= MIN_SEPARATION) {
            return Err(NetworkError::UnsortedEvents { index: i + 1 });
        }
    }
    Ok(())
}

/// Network state just before `t`: only events strictly earlier than `t`.
pub fn snapshot_at(events: &[EventRecord], t: f64) -> Result<DynamicNetwork, NetworkError> {
    check_sorted(events)?;
    let mut net = DynamicNetwork::new();
    for ev in events.iter().take_while(|ev| ev.time < t) {
        net.apply_mark(ev.time, &ev.mark)?;
    }
    Ok(net)
}

// ---------------------------------------------------------------------------
// Change statistics

/// A network statistic whose change under a single edge addition can be
/// evaluated locally.
pub trait ChangeStatistic: Send + Sync {
    fn name(&self) -> &str;

    /// `g(net + (u, v)) - g(net)` for a non-edge `(u, v)`.
    fn change(&self, net: &DynamicNetwork, u: NodeId, v: NodeId) -> f64;
}

struct EdgeCount;

impl ChangeStatistic for EdgeCount {
    fn name(&self) -> &str {
        "edges"
    }

    fn change(&self, _: &DynamicNetwork, _: NodeId, _: NodeId) -> f64 {
        1.0
    }
}

struct Triangles;

impl ChangeStatistic for Triangles {
    fn name(&self) -> &str {
        "triangles"
    }

    fn change(&self, net: &DynamicNetwork, u: NodeId, v: NodeId) -> f64 {
        net.common_neighbors(u, v) as f64
    }
}

/// Count of k-stars, `sum_i C(d_i, k)`.
struct KStar {
    name: String,
    k: u32,
}

impl ChangeStatistic for KStar {
    fn name(&self) -> &str {
        &self.name
    }

    fn change(&self, net: &DynamicNetwork, u: NodeId, v: NodeId) -> f64 {
        // C(d+1, k) - C(d, k) = C(d, k-1)
        binomial(net.degree(u) as u64, self.k - 1) + binomial(net.degree(v) as u64, self.k - 1)
    }
}

pub(crate) fn binomial(n: u64, k: u32) -> f64 {
    let k = k as u64;
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Name-keyed collection of change statistics. The default registry knows
/// `edges`, `triangles`, `2-star` and `3-star`.
#[derive(Clone)]
pub struct StatRegistry {
    stats: BTreeMap<String, Arc<dyn ChangeStatistic>>,
}

impl Default for StatRegistry {
    fn default() -> Self {
        let mut reg = StatRegistry { stats: BTreeMap::new() };
        reg.register(Arc::new(EdgeCount));
        reg.register(Arc::new(Triangles));
        for k in 2..=3 {
            reg.register(Arc::new(KStar { name: format!("{k}-star"), k }));
        }
        reg
    }
}

impl fmt::Debug for StatRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.stats.keys()).finish()
    }
}

impl StatRegistry {
    pub fn register(&mut self, stat: Arc<dyn ChangeStatistic>) {
        self.stats.insert(stat.name().to_string(), stat);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.stats.keys().map(String::as_str)
    }

    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<StatSet, NetworkError> {
        let stats = names
            .iter()
            .map(|n| {
                self.stats
                    .get(n.as_ref())
                    .cloned()
                    .ok_or_else(|| NetworkError::UnknownStatistic(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StatSet { stats })
    }
}

/// An ordered selection of change statistics.
#[derive(Clone)]
pub struct StatSet {
    stats: Vec<Arc<dyn ChangeStatistic>>,
}

impl fmt::Debug for StatSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.stats.iter().map(|s| s.name())).finish()
    }
}

impl StatSet {
    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.stats.iter().map(|s| s.name().to_string()).collect()
    }

    /// Writes the change vector for `(u, v)` into `out`.
    #[inline]
    pub fn compute_into(&self, net: &DynamicNetwork, u: NodeId, v: NodeId, out: &mut [f64]) {
        for (slot, stat) in out.iter_mut().zip(&self.stats) {
            *slot = stat.change(net, u, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeStatVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl ChangeStatVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Change statistics for adding `candidate` to `net`, using the default
/// registry. Endpoints not yet in `net` count as isolated pending nodes.
pub fn change_statistics<S: AsRef<str>>(
    net: &DynamicNetwork,
    candidate: Edge,
    stats: &[S],
) -> Result<ChangeStatVector, NetworkError> {
    let set = StatRegistry::default().resolve(stats)?;
    if net.has_edge(candidate.lo, candidate.hi) {
        return Err(NetworkError::DuplicateEdge(candidate));
    }
    let mut values = vec![0.0; set.len()];
    set.compute_into(net, candidate.lo, candidate.hi, &mut values);
    Ok(ChangeStatVector { names: set.names(), values })
}

// ---------------------------------------------------------------------------
// Summary statistics

/// Size-normalised network summaries. Centralities are averaged over nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub node_count: f64,
    pub edge_count: f64,
    /// Mean of `degree / (n - 1)`.
    pub degree_centrality: f64,
    /// Mean betweenness, each divided by `(n - 1)(n - 2) / 2`.
    pub betweenness_centrality: f64,
    /// Mean harmonic closeness `sum_j 1/d(i, j) / (n - 1)`; unreachable pairs add 0.
    pub closeness_centrality: f64,
    /// Mean principal-eigenvector score, scaled so the maximum is 1.
    pub eigenvector_centrality: f64,
    /// Transitivity: `3 * triangles / connected triples`.
    pub global_clustering: f64,
    /// Mean local clustering; nodes of degree < 2 contribute 0.
    pub local_clustering: f64,
}

impl NetworkSummary {
    pub fn as_pairs(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("node_count", self.node_count),
            ("edge_count", self.edge_count),
            ("degree_centrality", self.degree_centrality),
            ("betweenness_centrality", self.betweenness_centrality),
            ("closeness_centrality", self.closeness_centrality),
            ("eigenvector_centrality", self.eigenvector_centrality),
            ("global_clustering", self.global_clustering),
            ("local_clustering", self.local_clustering),
        ]
    }
}

pub fn summary_statistics(net: &DynamicNetwork) -> Result<NetworkSummary, NetworkError> {
    let n = net.node_count();
    if n == 0 {
        return Err(NetworkError::EmptyNetwork);
    }
    let nf = n as f64;
    let degrees = net.degrees();

    let degree_centrality = if n > 1 {
        degrees.iter().map(|&d| d as f64 / (nf - 1.0)).sum::<f64>() / nf
    } else {
        0.0
    };

    let (betweenness, closeness) = brandes(net);
    let betweenness_centrality = if n > 2 {
        let norm = (nf - 1.0) * (nf - 2.0) / 2.0;
        betweenness.iter().map(|b| b / norm).sum::<f64>() / nf
    } else {
        0.0
    };
    let closeness_centrality = if n > 1 {
        closeness.iter().map(|c| c / (nf - 1.0)).sum::<f64>() / nf
    } else {
        0.0
    };

    let eig = eigenvector_centrality(net);
    let eigenvector_centrality = eig.iter().sum::<f64>() / nf;

    let mut triangles_at = vec![0usize; n];
    for (e, _) in net.edges() {
        let (a, b) = (e.lo, e.hi);
        // each triangle is seen once per edge; attribute to the third vertex
        let (x, y) = (net.neighbors(a), net.neighbors(b));
        let (mut i, mut j) = (0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    triangles_at[x[i] as usize] += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    let closed: usize = triangles_at.iter().sum(); // = 3 * triangles
    let triples: f64 = degrees.iter().map(|&d| binomial(d as u64, 2)).sum();
    let global_clustering = if triples > 0.0 { closed as f64 / triples } else { 0.0 };
    let local_clustering = degrees
        .iter()
        .zip(&triangles_at)
        .map(|(&d, &t)| if d < 2 { 0.0 } else { t as f64 / binomial(d as u64, 2) })
        .sum::<f64>()
        / nf;

    Ok(NetworkSummary {
        node_count: nf,
        edge_count: net.edge_count() as f64,
        degree_centrality,
        betweenness_centrality,
        closeness_centrality,
        eigenvector_centrality,
        global_clustering,
        local_clustering,
    })
}

/// Brandes betweenness (undirected, unnormalised) and harmonic closeness sums.
fn brandes(net: &DynamicNetwork) -> (Vec<f64>, Vec<f64>) {
    let n = net.node_count();
    let mut cb = vec![0.0; n];
    let mut harmonic = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::with_capacity(n);
    for s in 0..n {
        for v in 0..n {
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
            preds[v].clear();
        }
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in net.neighbors(NodeId(v as u32)) {
                let w = w as usize;
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        harmonic[s] = order.iter().skip(1).map(|&v| 1.0 / dist[v] as f64).sum();
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    // each unordered pair counted from both ends
    cb.iter_mut().for_each(|b| *b /= 2.0);
    (cb, harmonic)
}

/// Power iteration on `A + I`, scaled so the largest entry is 1. Returns all
/// zeros for an edgeless graph.
pub(crate) fn eigenvector_centrality(net: &DynamicNetwork) -> Vec<f64> {
    let n = net.node_count();
    if net.edge_count() == 0 {
        return vec![0.0; n];
    }
    let mut x = vec![1.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..10_000 {
        for i in 0..n {
            next[i] = x[i] + net.neighbors(NodeId(i as u32)).iter().map(|&j| x[j as usize]).sum::<f64>();
        }
        let max = next.iter().cloned().fold(0.0, f64::max);
        next.iter_mut().for_each(|v| *v /= max);
        let change = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if change < 1e-13 {
            break;
        }
    }
    x
}

/// Sparse histogram over non-negative integer values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram(pub BTreeMap<usize, usize>);

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = usize>) -> Self {
        let mut h = BTreeMap::new();
        for v in values {
            *h.entry(v).or_insert(0) += 1;
        }
        Histogram(h)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn get(&self, value: usize) -> usize {
        self.0.get(&value).copied().unwrap_or(0)
    }

    /// Probability-normalised histogram.
    pub fn normalized(&self) -> Vec<(usize, f64)> {
        let total = self.total().max(1) as f64;
        self.0.iter().map(|(&k, &c)| (k, c as f64 / total)).collect()
    }

    /// Smallest value `q` with at least `p` of the mass at or below it.
    pub fn quantile(&self, p: f64) -> usize {
        let total = self.total() as f64;
        let mut acc = 0.0;
        for (&k, &c) in &self.0 {
            acc += c as f64;
            if acc >= p * total - 1e-9 {
                return k;
            }
        }
        self.0.keys().next_back().copied().unwrap_or(0)
    }

    /// Share of the summed value held by observations strictly above the
    /// `p`-quantile. For a degree histogram this is the fraction of edge
    /// endpoints owned by the top nodes, a size-free measure of tail weight.
    pub fn tail_share(&self, p: f64) -> f64 {
        let q = self.quantile(p);
        let total: f64 = self.0.iter().map(|(&k, &c)| (k * c) as f64).sum();
        if total == 0.0 {
            return 0.0;
        }
        self.0.range(q + 1..).map(|(&k, &c)| (k * c) as f64).sum::<f64>() / total
    }
}

pub fn degree_distribution(net: &DynamicNetwork) -> Result<Histogram, NetworkError> {
    if net.is_empty() {
        return Err(NetworkError::EmptyNetwork);
    }
    Ok(Histogram::from_values(net.degrees()))
}

/// Edgewise shared partners: for each edge, the number of common neighbours
/// of its endpoints.
pub fn esp_distribution(net: &DynamicNetwork) -> Result<Histogram, NetworkError> {
    if net.is_empty() {
        return Err(NetworkError::EmptyNetwork);
    }
    Ok(Histogram::from_values(net.edges().map(|(e, _)| net.common_neighbors(e.lo, e.hi))))
}
