//! Mark distributions `q(m | t, H_t)`: which nodes and edges an event adds.
//!
//! Every variant adds a set of new nodes and then draws each candidate edge
//! as an independent Bernoulli trial, so the mark probability is a product of
//! Bernoulli terms times (except for BA) a Poisson mass for the node count.
//!
//! | variant | new nodes            | edge probability                                   |
//! |---------|----------------------|----------------------------------------------------|
//! | BA      | exactly 1            | `delta_i / sum_k delta_k`, `delta_i = decay * d_i` |
//! | CS      | Poisson(lambda)      | `(nu + decay) * logistic(theta . C_ij)`            |
//! | SBM     | Poisson(lambda)      | `decay * C[x_i, x_new]`                            |
//! | LS      | Poisson(lambda)      | `decay * logistic(theta . (1?, dist))`             |
//!
//! `decay = exp(-tau * age)` where `age` is the time since the activity time
//! of the staler endpoint (arrival time, or time of its last edge).

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynet::{DynamicNetwork, Edge, Mark, NetworkError, NodeId, StatRegistry, StatSet};

/// Upper bound applied to CS/SBM/LS edge probabilities.
pub const PROB_CAP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkVariant {
    Ba,
    Cs,
    Sbm,
    Ls,
}

impl MarkVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkVariant::Ba => "ba",
            MarkVariant::Cs => "cs",
            MarkVariant::Sbm => "sbm",
            MarkVariant::Ls => "ls",
        }
    }
}

impl std::str::FromStr for MarkVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ba" => Ok(MarkVariant::Ba),
            "cs" => Ok(MarkVariant::Cs),
            "sbm" => Ok(MarkVariant::Sbm),
            "ls" => Ok(MarkVariant::Ls),
            other => Err(format!("unknown model `{other}` (expected ba, cs, sbm or ls)")),
        }
    }
}

/// Which pairs are edge candidates at an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeScope {
    /// Pairs with at least one endpoint among the event's new nodes.
    NewNode,
    /// Every pair not already joined.
    AllPairs,
}

/// Which time a node's decay is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivityMode {
    Arrival,
    LastEdge,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkError {
    #[error("invalid mark model: {0}")]
    InvalidSpec(String),
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("unknown statistic `{0}`")]
    UnknownStatistic(String),
    #[error("node {0} has no community label")]
    MissingCommunity(NodeId),
    #[error("node {0} has no latent position")]
    MissingPosition(NodeId),
    #[error("invalid mark: {0}")]
    InvalidMark(String),
}

impl From<NetworkError> for MarkError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::UnknownStatistic(s) => MarkError::UnknownStatistic(s),
            other => MarkError::InvalidMark(other.to_string()),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Parameters and structural options of a mark model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkModelSpec {
    pub variant: MarkVariant,
    /// Mark decay rate.
    pub tau: f64,
    /// Logistic coefficients (CS: one per statistic; LS: slope or intercept + slope).
    #[serde(default)]
    pub theta: Vec<f64>,
    /// Change statistics used by CS, in the order of `theta`.
    #[serde(default)]
    pub stats: Vec<String>,
    /// Baseline edge weight added to the decay (CS).
    #[serde(default)]
    pub nu: f64,
    /// Mean number of new nodes per event (CS/SBM/LS).
    #[serde(default)]
    pub lambda_nodes: f64,
    /// Community membership probabilities (SBM).
    #[serde(default)]
    pub block_probs: Vec<f64>,
    /// Between-community edge probabilities (SBM).
    #[serde(default)]
    pub block_matrix: Vec<Vec<f64>>,
    /// Latent space dimension (LS).
    #[serde(default)]
    pub latent_dim: usize,
    /// Standard deviation of new latent positions around the origin (LS).
    #[serde(default = "one")]
    pub latent_scale: f64,
    pub edge_scope: EdgeScope,
    pub activity: ActivityMode,
}

impl MarkModelSpec {
    fn base(variant: MarkVariant, tau: f64, edge_scope: EdgeScope) -> Self {
        MarkModelSpec {
            variant,
            tau,
            theta: Vec::new(),
            stats: Vec::new(),
            nu: 0.0,
            lambda_nodes: 0.0,
            block_probs: Vec::new(),
            block_matrix: Vec::new(),
            latent_dim: 0,
            latent_scale: 1.0,
            edge_scope,
            activity: ActivityMode::Arrival,
        }
    }

    pub fn ba(tau: f64) -> Self {
        Self::base(MarkVariant::Ba, tau, EdgeScope::NewNode)
    }

    pub fn cs<S: Into<String>>(stats: Vec<S>, theta: Vec<f64>, tau: f64, lambda_nodes: f64) -> Self {
        MarkModelSpec {
            stats: stats.into_iter().map(Into::into).collect(),
            theta,
            lambda_nodes,
            ..Self::base(MarkVariant::Cs, tau, EdgeScope::AllPairs)
        }
    }

    pub fn sbm(block_probs: Vec<f64>, block_matrix: Vec<Vec<f64>>, tau: f64, lambda_nodes: f64) -> Self {
        MarkModelSpec {
            block_probs,
            block_matrix,
            lambda_nodes,
            ..Self::base(MarkVariant::Sbm, tau, EdgeScope::NewNode)
        }
    }

    pub fn ls(theta: Vec<f64>, latent_dim: usize, tau: f64, lambda_nodes: f64) -> Self {
        MarkModelSpec {
            theta,
            latent_dim,
            lambda_nodes,
            ..Self::base(MarkVariant::Ls, tau, EdgeScope::NewNode)
        }
    }

    /// A mark model whose only possible mark is the empty one: no nodes are
    /// ever added and there are no candidate edges, so `q = 1`.
    pub fn trivial() -> Self {
        Self::cs(vec!["edges"], vec![0.0], 0.0, 0.0).with_scope(EdgeScope::NewNode)
    }

    pub fn with_scope(mut self, scope: EdgeScope) -> Self {
        self.edge_scope = scope;
        self
    }

    pub fn with_activity(mut self, activity: ActivityMode) -> Self {
        self.activity = activity;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_latent_scale(mut self, scale: f64) -> Self {
        self.latent_scale = scale;
        self
    }

    pub fn has_node_term(&self) -> bool {
        self.variant != MarkVariant::Ba
    }

    pub fn validate(&self) -> Result<(), MarkError> {
        let bad = |msg: String| Err(MarkError::InvalidSpec(msg));
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !nonneg(self.tau) {
            return bad(format!("tau must be >= 0, got {}", self.tau));
        }
        if !nonneg(self.nu) {
            return bad(format!("nu must be >= 0, got {}", self.nu));
        }
        if !nonneg(self.lambda_nodes) {
            return bad(format!("lambda_nodes must be >= 0, got {}", self.lambda_nodes));
        }
        if self.theta.iter().any(|x| !x.is_finite()) {
            return bad("theta must be finite".into());
        }
        match self.variant {
            MarkVariant::Ba => {
                if self.edge_scope != EdgeScope::NewNode {
                    return bad("BA only connects the new node; edge_scope must be new-node".into());
                }
            }
            MarkVariant::Cs => {
                if self.stats.is_empty() {
                    return bad("CS needs at least one change statistic".into());
                }
                if self.theta.len() != self.stats.len() {
                    return bad(format!(
                        "CS has {} statistics but {} theta coefficients",
                        self.stats.len(),
                        self.theta.len()
                    ));
                }
                StatRegistry::default().resolve(&self.stats)?;
            }
            MarkVariant::Sbm => {
                let r = self.block_probs.len();
                if r == 0 {
                    return bad("SBM needs block_probs".into());
                }
                if self.block_probs.iter().any(|&p| !nonneg(p)) || (self.block_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return bad("block_probs must be non-negative and sum to 1".into());
                }
                if self.block_matrix.len() != r || self.block_matrix.iter().any(|row| row.len() != r) {
                    return bad(format!("block_matrix must be {r}x{r}"));
                }
                for a in 0..r {
                    for b in 0..r {
                        let c = self.block_matrix[a][b];
                        if !(0.0..=1.0).contains(&c) {
                            return bad(format!("block_matrix[{a}][{b}] = {c} is outside [0, 1]"));
                        }
                        if (c - self.block_matrix[b][a]).abs() > 1e-12 {
                            return bad("block_matrix must be symmetric".into());
                        }
                    }
                }
            }
            MarkVariant::Ls => {
                if self.latent_dim == 0 {
                    return bad("LS needs latent_dim >= 1".into());
                }
                if !(self.latent_scale.is_finite() && self.latent_scale > 0.0) {
                    return bad("latent_scale must be > 0".into());
                }
                if !(1..=2).contains(&self.theta.len()) {
                    return bad("LS theta is [slope] or [intercept, slope]".into());
                }
            }
        }
        Ok(())
    }
}

/// Per-node covariates that are sampled with the node but are not part of the
/// network: SBM community labels and LS latent positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeAux {
    pub community: Vec<usize>,
    pub position: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuxRecord {
    None,
    Community(usize),
    Position(Vec<f64>),
}

impl NodeAux {
    pub fn push(&mut self, rec: AuxRecord) {
        match rec {
            AuxRecord::None => {}
            AuxRecord::Community(c) => self.community.push(c),
            AuxRecord::Position(x) => self.position.push(x),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.community.is_empty() && self.position.is_empty()
    }
}

/// Auxiliary lookup over committed records plus those of pending new nodes.
#[derive(Clone, Copy)]
struct AuxView<'a> {
    base: &'a NodeAux,
    pending: &'a [AuxRecord],
}

impl AuxView<'_> {
    fn community(&self, i: NodeId) -> Result<usize, MarkError> {
        let idx = i.index();
        if let Some(&c) = self.base.community.get(idx) {
            return Ok(c);
        }
        match self.pending.get(idx - self.base.community.len()) {
            Some(AuxRecord::Community(c)) => Ok(*c),
            _ => Err(MarkError::MissingCommunity(i)),
        }
    }

    fn position(&self, i: NodeId) -> Result<&[f64], MarkError> {
        let idx = i.index();
        if let Some(x) = self.base.position.get(idx) {
            return Ok(x);
        }
        match self.pending.get(idx - self.base.position.len()) {
            Some(AuxRecord::Position(x)) => Ok(x),
            _ => Err(MarkError::MissingPosition(i)),
        }
    }
}

/// A validated mark model with its change statistics resolved.
#[derive(Debug, Clone)]
pub struct MarkModel {
    spec: MarkModelSpec,
    stats: Option<StatSet>,
}

impl MarkModel {
    pub fn new(spec: MarkModelSpec) -> Result<Self, MarkError> {
        spec.validate()?;
        let stats = match spec.variant {
            MarkVariant::Cs => Some(StatRegistry::default().resolve(&spec.stats)?),
            _ => None,
        };
        Ok(MarkModel { spec, stats })
    }

    /// Same as [`new`](Self::new) with a custom statistic registry.
    pub fn with_registry(spec: MarkModelSpec, registry: &StatRegistry) -> Result<Self, MarkError> {
        spec.validate().or_else(|e| match e {
            MarkError::UnknownStatistic(_) => Ok(()),
            other => Err(other),
        })?;
        let stats = match spec.variant {
            MarkVariant::Cs => Some(registry.resolve(&spec.stats)?),
            _ => None,
        };
        Ok(MarkModel { spec, stats })
    }

    pub fn spec(&self) -> &MarkModelSpec {
        &self.spec
    }

    /// Swaps in new parameter values, keeping the structure.
    pub fn set_spec(&mut self, spec: MarkModelSpec) {
        debug_assert_eq!(spec.variant, self.spec.variant);
        self.spec = spec;
    }

    fn width(&self) -> usize {
        match self.spec.variant {
            MarkVariant::Ba | MarkVariant::Ls => 1,
            MarkVariant::Sbm => 2,
            MarkVariant::Cs => self.stats.as_ref().map_or(0, StatSet::len),
        }
    }
}

fn activity_time(net: &DynamicNetwork, i: NodeId, mode: ActivityMode, t: f64) -> f64 {
    match net.node_birth(i) {
        None => t,
        Some(birth) => match mode {
            ActivityMode::Arrival => birth,
            ActivityMode::LastEdge => net.last_edge_time(i).unwrap_or(birth),
        },
    }
}

/// Candidate pairs at an event adding `n_new` nodes, in `(hi, lo)` order.
fn candidate_pairs(scope: EdgeScope, net: &DynamicNetwork, n_new: usize) -> Vec<Edge> {
    let n = net.node_count() as u32;
    let total = n + n_new as u32;
    let mut out = Vec::new();
    let first_hi = match scope {
        EdgeScope::NewNode => n,
        EdgeScope::AllPairs => 1,
    };
    for hi in first_hi..total {
        if hi < n {
            let nbrs = net.neighbors(NodeId(hi));
            let mut k = 0;
            for lo in 0..hi {
                while k < nbrs.len() && nbrs[k] < lo {
                    k += 1;
                }
                if k < nbrs.len() && nbrs[k] == lo {
                    continue;
                }
                out.push(Edge::between(lo, hi));
            }
        } else {
            out.extend((0..hi).map(|lo| Edge::between(lo, hi)));
        }
    }
    out
}

/// Parameter-free description of every edge candidate at one event.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub edges: Vec<Edge>,
    /// Time since the staler endpoint's activity time.
    pub ages: Vec<f64>,
    /// `width` features per candidate (degree, change statistics, block pair, distance).
    pub features: Vec<f64>,
    pub width: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }
}

fn build_candidates(
    model: &MarkModel,
    net: &DynamicNetwork,
    aux: AuxView<'_>,
    t: f64,
    pairs: Vec<Edge>,
) -> Result<CandidateSet, MarkError> {
    let spec = &model.spec;
    let width = model.width();
    let mut ages = Vec::with_capacity(pairs.len());
    let mut features = vec![0.0; pairs.len() * width];
    for (idx, e) in pairs.iter().enumerate() {
        let (lo, hi) = (e.lo(), e.hi());
        let stale = activity_time(net, lo, spec.activity, t).min(activity_time(net, hi, spec.activity, t));
        ages.push(t - stale);
        let slot = &mut features[idx * width..(idx + 1) * width];
        match spec.variant {
            // BA candidates always pair an old node `lo` with the new node
            MarkVariant::Ba => slot[0] = net.degree(lo) as f64,
            MarkVariant::Cs => model.stats.as_ref().expect("resolved").compute_into(net, lo, hi, slot),
            MarkVariant::Sbm => {
                slot[0] = aux.community(lo)? as f64;
                slot[1] = aux.community(hi)? as f64;
                let r = spec.block_probs.len();
                if slot[0] as usize >= r || slot[1] as usize >= r {
                    return Err(MarkError::InvalidMark(format!("community label outside 0..{r}")));
                }
            }
            MarkVariant::Ls => {
                let (a, b) = (aux.position(lo)?, aux.position(hi)?);
                if a.len() != spec.latent_dim || b.len() != spec.latent_dim {
                    return Err(MarkError::InvalidMark("latent position has wrong dimension".into()));
                }
                slot[0] = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            }
        }
    }
    if spec.variant == MarkVariant::Ba && features.iter().all(|&d| d == 0.0) {
        // no node has an edge yet: uniform attachment
        features.iter_mut().for_each(|d| *d = 1.0);
        ages.iter_mut().for_each(|a| *a = 0.0);
    }
    Ok(CandidateSet { edges: pairs, ages, features, width })
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn ls_score(theta: &[f64], dist: f64) -> f64 {
    match theta {
        [slope] => slope * dist,
        [icpt, slope] => icpt + slope * dist,
        _ => unreachable!("validated"),
    }
}

/// Unclamped edge probability and its logarithm for CS/SBM/LS.
#[inline]
fn raw_edge_prob(spec: &MarkModelSpec, age: f64, f: &[f64]) -> (f64, f64) {
    match spec.variant {
        MarkVariant::Cs => {
            let z: f64 = spec.theta.iter().zip(f).map(|(a, b)| a * b).sum();
            let w = spec.nu + (-spec.tau * age).exp();
            (w * logistic(z), w.ln() - softplus(-z))
        }
        MarkVariant::Sbm => {
            let c = spec.block_matrix[f[0] as usize][f[1] as usize];
            let log_decay = -spec.tau * age;
            (log_decay.exp() * c, log_decay + c.ln())
        }
        MarkVariant::Ls => {
            let z = ls_score(&spec.theta, f[0]);
            let log_decay = -spec.tau * age;
            (log_decay.exp() * logistic(z), log_decay - softplus(-z))
        }
        MarkVariant::Ba => unreachable!("BA probabilities are normalised over the set"),
    }
}

/// BA log-weights `ln(decay * degree)`; `-inf` for degree 0.
#[inline]
fn ba_log_weight(tau: f64, age: f64, degree: f64) -> f64 {
    if degree > 0.0 {
        -tau * age + degree.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn log_sum_exp(terms: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    // (log value, multiplicity)
    let max = terms.clone().map(|(l, _)| l).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|(l, w)| w * (l - max).exp()).sum::<f64>().ln()
}

/// Edge probabilities for every candidate and how many were clamped.
pub fn edge_probabilities(model: &MarkModel, set: &CandidateSet) -> (Vec<f64>, usize) {
    let spec = &model.spec;
    if spec.variant == MarkVariant::Ba {
        let logs: Vec<f64> = (0..set.len()).map(|i| ba_log_weight(spec.tau, set.ages[i], set.feature(i)[0])).collect();
        let norm = log_sum_exp(logs.iter().map(|&l| (l, 1.0)));
        let probs = logs.iter().map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { (l - norm).exp() }).collect();
        return (probs, 0);
    }
    let mut clamped = 0;
    let probs = (0..set.len())
        .map(|i| {
            let (p, _) = raw_edge_prob(spec, set.ages[i], set.feature(i));
            if p > PROB_CAP {
                clamped += 1;
                PROB_CAP
            } else {
                p
            }
        })
        .collect();
    (probs, clamped)
}

/// Why a mark had probability zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroLikelihood {
    /// An observed edge had probability 0, or an unobserved one probability 1.
    Edge,
    /// The node count has zero Poisson mass (for example new nodes after the cutoff).
    NodeCount,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkLogProb {
    pub log_prob: f64,
    pub zero_likelihood: Option<ZeroLikelihood>,
    pub clamped: usize,
}

/// Log Poisson mass `ln P(k; lambda)`; `lambda = 0` puts all mass on 0.
pub fn poisson_ln_pmf(k: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    k as f64 * lambda.ln() - lambda - ln_fact
}

/// Sign pattern of one feature column over a whole history.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FeatureSupport {
    pub chosen_nonzero: bool,
    pub other_positive: bool,
    pub other_negative: bool,
}

impl FeatureSupport {
    /// The column never moves a chosen edge but pushes unchosen candidates
    /// one way, so the log-likelihood is monotone in its coefficient and has
    /// no finite maximiser.
    pub fn one_sided(&self) -> bool {
        !self.chosen_nonzero && self.other_positive != self.other_negative
    }
}

/// Parameter-free summary of one observed event, compressed for repeated
/// likelihood evaluation. Candidates with identical age, features and
/// outcome are merged into one weighted row.
#[derive(Debug, Clone)]
pub struct EventDesign {
    pub n_new: usize,
    pub node_rate_active: bool,
    width: usize,
    ages: Vec<f64>,
    features: Vec<f64>,
    weights: Vec<f64>,
    selected: Vec<bool>,
}

impl EventDesign {
    fn compress(model: &MarkModel, set: &CandidateSet, chosen: &[bool], n_new: usize, node_rate_active: bool) -> Self {
        let width = set.width;
        let ba = model.spec.variant == MarkVariant::Ba;
        let mut index: HashMap<(bool, u64, Vec<u64>), usize> = HashMap::new();
        let mut d = EventDesign {
            n_new,
            node_rate_active,
            width,
            ages: Vec::new(),
            features: Vec::new(),
            weights: Vec::new(),
            selected: Vec::new(),
        };
        for i in 0..set.len() {
            let f = set.feature(i);
            // unselected degree-0 BA candidates have p = 0 and contribute nothing
            if ba && !chosen[i] && f[0] == 0.0 {
                continue;
            }
            let key = (chosen[i], set.ages[i].to_bits(), f.iter().map(|x| x.to_bits()).collect());
            match index.get(&key) {
                Some(&row) => d.weights[row] += 1.0,
                None => {
                    index.insert(key, d.weights.len());
                    d.ages.push(set.ages[i]);
                    d.features.extend_from_slice(f);
                    d.weights.push(1.0);
                    d.selected.push(chosen[i]);
                }
            }
        }
        d
    }

    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    /// Node-count part of the log mark probability.
    pub fn node_log_prob(&self, spec: &MarkModelSpec) -> f64 {
        if !spec.has_node_term() {
            return 0.0;
        }
        let lambda = if self.node_rate_active { spec.lambda_nodes } else { 0.0 };
        poisson_ln_pmf(self.n_new, lambda)
    }

    /// Edge part of the log mark probability, with its clamp count.
    pub fn edge_log_prob(&self, spec: &MarkModelSpec) -> (f64, usize, bool) {
        let mut total = 0.0;
        let mut clamped = 0;
        let mut impossible = false;
        if spec.variant == MarkVariant::Ba {
            let logs = (0..self.rows()).map(|i| (ba_log_weight(spec.tau, self.ages[i], self.features[i]), self.weights[i]));
            let norm = log_sum_exp(logs.clone());
            for (i, (l, w)) in logs.enumerate() {
                let lp = l - norm;
                if self.selected[i] {
                    if l == f64::NEG_INFINITY {
                        impossible = true;
                    }
                    total += w * lp;
                } else {
                    let p = lp.exp();
                    if p >= 1.0 {
                        impossible = true;
                        total = f64::NEG_INFINITY;
                    } else {
                        total += w * (-p).ln_1p();
                    }
                }
            }
            return (total, 0, impossible);
        }
        let width = self.width;
        for i in 0..self.rows() {
            let f = &self.features[i * width..(i + 1) * width];
            let (p, lp) = raw_edge_prob(spec, self.ages[i], f);
            let w = self.weights[i];
            let capped = p > PROB_CAP;
            if capped {
                clamped += w as usize;
            }
            if self.selected[i] {
                if p == 0.0 {
                    impossible = true;
                    total = f64::NEG_INFINITY;
                } else {
                    total += w * if capped { PROB_CAP.ln() } else { lp };
                }
            } else {
                total += w * (-p.min(PROB_CAP)).ln_1p();
            }
        }
        (total, clamped, impossible)
    }

    /// Adds this event's sign pattern of each feature column to `acc`.
    pub fn accumulate_support(&self, acc: &mut [FeatureSupport]) {
        for i in 0..self.rows() {
            for (j, a) in acc.iter_mut().enumerate().take(self.width) {
                let f = self.features[i * self.width + j];
                if self.selected[i] {
                    a.chosen_nonzero |= f != 0.0;
                } else {
                    a.other_positive |= f > 0.0;
                    a.other_negative |= f < 0.0;
                }
            }
        }
    }

    pub fn log_prob(&self, spec: &MarkModelSpec) -> MarkLogProb {
        let node = self.node_log_prob(spec);
        let (edge, clamped, impossible) = self.edge_log_prob(spec);
        let zero_likelihood = if node == f64::NEG_INFINITY {
            Some(ZeroLikelihood::NodeCount)
        } else if impossible {
            Some(ZeroLikelihood::Edge)
        } else {
            None
        };
        MarkLogProb { log_prob: node + edge, zero_likelihood, clamped }
    }
}

impl MarkModel {
    /// Builds the likelihood design for an observed mark. `aux` must already
    /// cover the mark's new nodes.
    pub fn design(
        &self,
        net: &DynamicNetwork,
        aux: &NodeAux,
        t: f64,
        mark: &Mark,
        node_rate_active: bool,
    ) -> Result<EventDesign, MarkError> {
        net.check_mark(t, mark)?;
        let n_new = mark.new_nodes.len();
        if self.spec.variant == MarkVariant::Ba && n_new != 1 {
            return Err(MarkError::InvalidMark(format!("BA marks add exactly one node, got {n_new}")));
        }
        let pairs = candidate_pairs(self.spec.edge_scope, net, n_new);
        let set = build_candidates(self, net, AuxView { base: aux, pending: &[] }, t, pairs)?;
        let mut chosen = vec![false; set.len()];
        for e in &mark.new_edges {
            // candidates are sorted by (hi, lo)
            let pos = set
                .edges
                .binary_search_by(|c| (c.hi(), c.lo()).cmp(&(e.hi(), e.lo())))
                .map_err(|_| MarkError::InvalidMark(format!("edge {e} is not a candidate under {:?}", self.spec.edge_scope)))?;
            chosen[pos] = true;
        }
        Ok(EventDesign::compress(self, &set, &chosen, n_new, node_rate_active))
    }

    pub fn log_prob_mark(
        &self,
        net: &DynamicNetwork,
        aux: &NodeAux,
        t: f64,
        mark: &Mark,
        node_rate_active: bool,
    ) -> Result<MarkLogProb, MarkError> {
        Ok(self.design(net, aux, t, mark, node_rate_active)?.log_prob(&self.spec))
    }

    /// Candidate set for a hypothetical event adding `pending.len()` nodes
    /// (or one node for BA) with the given auxiliary records.
    pub fn candidates(
        &self,
        net: &DynamicNetwork,
        aux: &NodeAux,
        t: f64,
        pending: &[AuxRecord],
    ) -> Result<CandidateSet, MarkError> {
        let n_new = match self.spec.variant {
            MarkVariant::Ba => 1,
            _ => pending.len(),
        };
        let pairs = candidate_pairs(self.spec.edge_scope, net, n_new);
        build_candidates(self, net, AuxView { base: aux, pending }, t, pairs)
    }

    /// Draws a mark at time `t` given the network just before `t`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        net: &DynamicNetwork,
        aux: &NodeAux,
        t: f64,
        node_rate_active: bool,
        rng: &mut R,
    ) -> Result<SampledMark, MarkError> {
        let spec = &self.spec;
        let n_new = match spec.variant {
            MarkVariant::Ba => 1,
            _ => {
                let lambda = if node_rate_active { spec.lambda_nodes } else { 0.0 };
                if lambda > 0.0 {
                    Poisson::new(lambda).expect("lambda > 0").sample(rng) as usize
                } else {
                    0
                }
            }
        };
        let new_aux: Vec<AuxRecord> = (0..n_new)
            .map(|_| match spec.variant {
                MarkVariant::Sbm => AuxRecord::Community(sample_categorical(&spec.block_probs, rng)),
                MarkVariant::Ls => {
                    let normal = Normal::new(0.0, spec.latent_scale).expect("scale > 0");
                    AuxRecord::Position((0..spec.latent_dim).map(|_| normal.sample(rng)).collect())
                }
                _ => AuxRecord::None,
            })
            .collect();
        let set = self.candidates(net, aux, t, &new_aux)?;
        let (probs, clamped) = edge_probabilities(self, &set);
        let edges = set
            .edges
            .iter()
            .zip(&probs)
            .filter(|(_, &p)| rng.random::<f64>() < p)
            .map(|(e, _)| *e)
            .collect();
        let first = net.node_count() as u32;
        let nodes = (first..first + n_new as u32).map(NodeId).collect();
        Ok(SampledMark { mark: Mark::new(nodes, edges), new_aux, clamped })
    }
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledMark {
    pub mark: Mark,
    pub new_aux: Vec<AuxRecord>,
    pub clamped: usize,
}

/// Draws a mark from `spec` (convenience wrapper around [`MarkModel::sample`]).
pub fn sample_mark<R: Rng + ?Sized>(
    spec: &MarkModelSpec,
    net: &DynamicNetwork,
    aux: &NodeAux,
    t: f64,
    rng: &mut R,
) -> Result<SampledMark, MarkError> {
    MarkModel::new(spec.clone())?.sample(net, aux, t, true, rng)
}

/// `ln q(m | t, H_t)` (convenience wrapper around [`MarkModel::log_prob_mark`]).
pub fn log_prob_mark(
    spec: &MarkModelSpec,
    net: &DynamicNetwork,
    aux: &NodeAux,
    t: f64,
    mark: &Mark,
) -> Result<MarkLogProb, MarkError> {
    MarkModel::new(spec.clone())?.log_prob_mark(net, aux, t, mark, true)
}

/// BA attachment probabilities of a new node to each existing node.
pub fn ba_edge_probs(net: &DynamicNetwork, t: f64, tau: f64, activity: ActivityMode) -> Result<Vec<f64>, MarkError> {
    if net.is_empty() {
        return Err(MarkError::EmptyNetwork);
    }
    let model = MarkModel::new(MarkModelSpec::ba(tau).with_activity(activity))?;
    let set = model.candidates(net, &NodeAux::default(), t, &[])?;
    Ok(edge_probabilities(&model, &set).0)
}

/// CS probabilities together with the change statistics they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CsEdgeProbs {
    pub probs: Vec<f64>,
    pub change_stats: Vec<Vec<f64>>,
    pub clamped: usize,
}

/// CS edge probabilities for explicit candidate pairs.
pub fn cs_edge_probs(
    net: &DynamicNetwork,
    t: f64,
    spec: &MarkModelSpec,
    candidates: &[Edge],
) -> Result<CsEdgeProbs, MarkError> {
    if spec.variant != MarkVariant::Cs {
        return Err(MarkError::InvalidSpec("cs_edge_probs needs a CS spec".into()));
    }
    let model = MarkModel::new(spec.clone())?;
    for e in candidates {
        if net.has_edge(e.lo(), e.hi()) {
            return Err(MarkError::InvalidMark(format!("candidate {e} already present")));
        }
    }
    let set = build_candidates(&model, net, AuxView { base: &NodeAux::default(), pending: &[] }, t, candidates.to_vec())?;
    let (probs, clamped) = edge_probabilities(&model, &set);
    let change_stats = (0..set.len()).map(|i| set.feature(i).to_vec()).collect();
    Ok(CsEdgeProbs { probs, change_stats, clamped })
}

/// SBM probabilities of a new node with community `new_community` joining
/// each existing node.
pub fn sbm_edge_probs(
    net: &DynamicNetwork,
    aux: &NodeAux,
    t: f64,
    spec: &MarkModelSpec,
    new_community: usize,
) -> Result<Vec<f64>, MarkError> {
    let model = MarkModel::new(MarkModelSpec { edge_scope: EdgeScope::NewNode, ..spec.clone() })?;
    for i in 0..net.node_count() {
        if aux.community.get(i).is_none() {
            return Err(MarkError::MissingCommunity(NodeId(i as u32)));
        }
    }
    let set = model.candidates(net, aux, t, &[AuxRecord::Community(new_community)])?;
    Ok(edge_probabilities(&model, &set).0)
}

/// LS probabilities of a new node at `new_position` joining each existing node.
pub fn ls_edge_probs(
    net: &DynamicNetwork,
    aux: &NodeAux,
    t: f64,
    spec: &MarkModelSpec,
    new_position: Vec<f64>,
) -> Result<Vec<f64>, MarkError> {
    let model = MarkModel::new(MarkModelSpec { edge_scope: EdgeScope::NewNode, ..spec.clone() })?;
    for i in 0..net.node_count() {
        if aux.position.get(i).is_none() {
            return Err(MarkError::MissingPosition(NodeId(i as u32)));
        }
    }
    let set = model.candidates(net, aux, t, &[AuxRecord::Position(new_position)])?;
    Ok(edge_probabilities(&model, &set).0)
}
