//! The joint process: conditional intensity, simulation by thinning, and
//! stability diagnostics.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynet::{DynamicNetwork, EventRecord, Mark, NetworkError};
use crate::kernel::{ground_intensity, ExcitationState, GroundParams, KernelError, MIN_SEPARATION};
use crate::markmodel::{MarkError, MarkModel, MarkModelSpec, NodeAux};

/// Default ceiling on the number of simulated events.
pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub ground: GroundParams,
    pub mark: MarkModelSpec,
    pub horizon: f64,
    /// Fraction of the horizon after which no new nodes arrive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_rate_cutoff: Option<f64>,
}

impl ModelSpec {
    pub fn new(ground: GroundParams, mark: MarkModelSpec, horizon: f64) -> Self {
        ModelSpec { ground, mark, horizon, node_rate_cutoff: None }
    }

    pub fn with_cutoff(mut self, fraction: f64) -> Self {
        self.node_rate_cutoff = Some(fraction);
        self
    }

    pub fn validate(&self) -> Result<(), ProcessError> {
        self.ground.validate()?;
        self.mark.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(ProcessError::InvalidSpec(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if let Some(f) = self.node_rate_cutoff {
            if !(f > 0.0 && f <= 1.0) {
                return Err(ProcessError::InvalidSpec(format!("node_rate_cutoff must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }

    /// Whether new nodes may still arrive at time `t`.
    pub fn node_rate_active(&self, t: f64) -> bool {
        self.node_rate_cutoff.is_none_or(|f| t <= f * self.horizon)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProcessError {
    #[error("{0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Mark(#[from] MarkError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("simulation exceeded {limit} events before t = {time}")]
    Explosion { limit: usize, time: f64, partial: Box<Realization> },
    #[error("process is not subcritical: K/beta = {ratio}")]
    Unstable { ratio: f64 },
    #[error("kernel is not integrable: {0}")]
    NonIntegrableKernel(String),
}

/// A simulated (or observed) history on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub events: Vec<EventRecord>,
    pub aux: NodeAux,
    pub seed: u64,
    pub spec: ModelSpec,
    pub network: DynamicNetwork,
    /// Candidate edges whose probability hit the clamp.
    pub clamp_events: usize,
}

impl Realization {
    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulateOptions {
    pub max_events: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions { max_events: DEFAULT_MAX_EVENTS }
    }
}

/// Simulates the process by thinning; a pure function of `(spec, seed)`.
pub fn simulate(spec: &ModelSpec, seed: u64) -> Result<Realization, ProcessError> {
    simulate_with(spec, seed, SimulateOptions::default())
}

pub fn simulate_with(spec: &ModelSpec, seed: u64, opts: SimulateOptions) -> Result<Realization, ProcessError> {
    spec.validate()?;
    if !spec.ground.is_stable() {
        log::warn!("K/beta = {} >= 1: the ground process is not subcritical", spec.ground.branching_ratio());
    }
    let model = MarkModel::new(spec.mark.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let GroundParams { mu, k, beta } = spec.ground;
    let mut excitation = ExcitationState::new(beta);
    let mut net = DynamicNetwork::new();
    let mut aux = NodeAux::default();
    let mut events = Vec::new();
    let mut clamp_events = 0;
    let mut last_event = f64::NEG_INFINITY;
    let mut t = 0.0;
    loop {
        // intensity is non-increasing until the next event, so its value now bounds it
        let bound = mu + k * excitation.peek(t);
        if bound <= 0.0 {
            break;
        }
        t += Exp::new(bound).expect("positive rate").sample(&mut rng);
        if t > spec.horizon {
            break;
        }
        let rate = mu + k * excitation.peek(t);
        debug_assert!(rate <= bound * (1.0 + 1e-12), "dominating rate violated");
        if rng.random::<f64>() * bound > rate || t - last_event < MIN_SEPARATION {
            continue;
        }
        let sampled = model.sample(&net, &aux, t, spec.node_rate_active(t), &mut rng)?;
        net.apply_mark(t, &sampled.mark)?;
        sampled.new_aux.into_iter().for_each(|r| aux.push(r));
        clamp_events += sampled.clamped;
        events.push(EventRecord::new(t, sampled.mark));
        excitation.advance(t);
        excitation.add_event();
        last_event = t;
        if events.len() > opts.max_events {
            let partial = Realization { events, aux, seed, spec: spec.clone(), network: net, clamp_events };
            return Err(ProcessError::Explosion { limit: opts.max_events, time: t, partial: Box::new(partial) });
        }
    }
    Ok(Realization { events, aux, seed, spec: spec.clone(), network: net, clamp_events })
}

/// Joint density `q(m | t, H_t) * lambda_g(t)` of an event with mark `m` at
/// time `t` after `history`. Marks that are not valid additions have density 0.
pub fn joint_intensity(
    spec: &ModelSpec,
    history: &[EventRecord],
    aux: &NodeAux,
    t: f64,
    mark: &Mark,
) -> Result<f64, ProcessError> {
    spec.validate()?;
    if let Some(last) = history.last() {
        if t <= last.time {
            return Err(NetworkError::NonMonotoneTime { time: t, last: last.time }.into());
        }
    }
    let net = DynamicNetwork::from_events(history)?;
    if net.check_mark(t, mark).is_err() {
        return Ok(0.0);
    }
    let times: Vec<f64> = history.iter().map(|e| e.time).collect();
    let model = MarkModel::new(spec.mark.clone())?;
    let q = match model.log_prob_mark(&net, aux, t, mark, spec.node_rate_active(t)) {
        Ok(lp) => lp.log_prob.exp(),
        Err(MarkError::InvalidMark(_)) => 0.0,
        Err(e) => return Err(e.into()),
    };
    Ok(q * ground_intensity(t, &times, &spec.ground))
}

/// Closed-form branching ratio `K / beta` of the exponential ground kernel.
pub fn branching_ratio(spec: &ModelSpec) -> f64 {
    spec.ground.branching_ratio()
}

/// Long-run mean event rate `mu / (1 - K/beta)`.
pub fn mean_intensity_estimate(spec: &ModelSpec) -> Result<f64, ProcessError> {
    let ratio = spec.ground.branching_ratio();
    if ratio >= 1.0 {
        return Err(ProcessError::Unstable { ratio });
    }
    Ok(spec.ground.mu / (1.0 - ratio))
}

/// Per-replication rng seed derived from a master seed: stream `index` of a
/// ChaCha8 generator keyed by the master seed, first output.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Excitation kernels whose integrated effect can be estimated along
/// simulated histories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiagnosticKernel {
    /// `K exp(-beta s)`.
    Exponential { k: f64, beta: f64 },
    /// `alpha (1 + gamma w) exp(-beta s)`, `w` = triangles through the event's edges.
    TriangleFeedback { alpha: f64, gamma: f64, beta: f64 },
    /// `(sum of degrees touched / N)^alpha (1 + s/c)^-p`.
    DegreePowerLaw { alpha: f64, c: f64, p: f64 },
}

impl DiagnosticKernel {
    fn check(&self) -> Result<(), ProcessError> {
        match *self {
            DiagnosticKernel::DegreePowerLaw { p, c, .. } => {
                if p <= 1.0 {
                    return Err(ProcessError::NonIntegrableKernel(format!("power-law exponent p = {p} <= 1")));
                }
                if c <= 0.0 {
                    return Err(ProcessError::InvalidSpec("power-law scale c must be > 0".into()));
                }
            }
            DiagnosticKernel::Exponential { beta, .. } | DiagnosticKernel::TriangleFeedback { beta, .. } => {
                if beta <= 0.0 {
                    return Err(ProcessError::InvalidSpec("kernel decay must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// `int_0^h g(s, m | H) ds` for an event with mark `mark`, evaluated on
    /// the network just after the event.
    pub fn integral(&self, mark: &Mark, net: &DynamicNetwork, h: f64) -> f64 {
        match *self {
            DiagnosticKernel::Exponential { k, beta } => k * -(-beta * h).exp_m1() / beta,
            DiagnosticKernel::TriangleFeedback { alpha, gamma, beta } => {
                let w: usize = mark.new_edges.iter().map(|e| net.common_neighbors(e.lo(), e.hi())).sum();
                alpha * (1.0 + gamma * w as f64) * -(-beta * h).exp_m1() / beta
            }
            DiagnosticKernel::DegreePowerLaw { alpha, c, p } => {
                let mut touched: Vec<_> = mark.new_nodes.clone();
                touched.extend(mark.new_edges.iter().flat_map(|e| [e.lo(), e.hi()]));
                touched.sort_unstable();
                touched.dedup();
                let n = net.node_count().max(1) as f64;
                let f = (touched.iter().map(|&i| net.degree(i) as f64).sum::<f64>() / n).powf(alpha);
                f * c / (p - 1.0) * (1.0 - (1.0 + h / c).powf(1.0 - p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchingEstimate {
    /// Mean over replications of the per-history mean integrated excitation.
    pub mean: f64,
    pub std_error: f64,
    /// Largest per-history mean.
    pub max_history: f64,
    /// Some sampled history had mean integrated excitation >= 1.
    pub sup_violation: bool,
    pub reps: usize,
}

/// Monte Carlo estimate of the expected integrated excitation per event.
///
/// Histories are simulated from `spec`; each event's excitation under
/// `kernel` is integrated over `[0, h]`. This is a heuristic: it only looks
/// at histories the model actually produces, not the supremum over all.
pub fn estimate_branching_ratio_mc(
    kernel: DiagnosticKernel,
    spec: &ModelSpec,
    h: f64,
    reps: usize,
    master_seed: u64,
) -> Result<BranchingEstimate, ProcessError> {
    kernel.check()?;
    if reps == 0 {
        return Err(ProcessError::InvalidSpec("reps must be >= 1".into()));
    }
    let mut per_history = Vec::with_capacity(reps);
    for i in 0..reps {
        let r = simulate(spec, replication_seed(master_seed, i as u64))?;
        let mut net = DynamicNetwork::new();
        let mut total = 0.0;
        for ev in &r.events {
            net.apply_mark(ev.time, &ev.mark)?;
            total += kernel.integral(&ev.mark, &net, h);
        }
        if !r.events.is_empty() {
            per_history.push(total / r.events.len() as f64);
        }
    }
    if per_history.is_empty() {
        return Err(ProcessError::InvalidSpec("no simulated history contained events".into()));
    }
    let n = per_history.len() as f64;
    let mean = per_history.iter().sum::<f64>() / n;
    let var = if per_history.len() > 1 {
        per_history.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let max_history = per_history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(BranchingEstimate { mean, std_error: (var / n).sqrt(), max_history, sup_violation: max_history >= 1.0, reps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynet::{Edge, NodeId};
    use crate::markmodel::EdgeScope;

    fn trivial(mu: f64, k: f64, beta: f64, horizon: f64) -> ModelSpec {
        ModelSpec::new(GroundParams::new(mu, k, beta), MarkModelSpec::trivial(), horizon)
    }

    #[test]
    fn zero_background_gives_no_events() {
        let r = simulate(&trivial(0.0, 0.5, 2.0, 100.0), 3).unwrap();
        assert!(r.events.is_empty());
    }

    #[test]
    fn same_seed_same_realization() {
        let spec = ModelSpec::new(GroundParams::new(5.0, 0.5, 2.0), MarkModelSpec::ba(0.5), 10.0);
        assert_eq!(simulate(&spec, 11).unwrap(), simulate(&spec, 11).unwrap());
        assert_ne!(simulate(&spec, 11).unwrap().events, simulate(&spec, 12).unwrap().events);
    }

    #[test]
    fn replay_reproduces_network() {
        let spec = ModelSpec::new(
            GroundParams::new(8.0, 0.5, 2.0),
            MarkModelSpec::cs(vec!["edges", "triangles"], vec![-2.0, 0.5], 0.5, 1.0),
            5.0,
        );
        let r = simulate(&spec, 5).unwrap();
        assert!(r.events.windows(2).all(|w| w[1].time > w[0].time));
        assert_eq!(DynamicNetwork::from_events(&r.events).unwrap(), r.network);
    }

    #[test]
    fn cutoff_stops_node_arrivals() {
        let spec = ModelSpec::new(
            GroundParams::new(20.0, 0.0, 1.0),
            MarkModelSpec::cs(vec!["edges"], vec![-3.0], 0.5, 1.0),
            10.0,
        )
        .with_cutoff(0.2);
        let r = simulate(&spec, 8).unwrap();
        assert!(r.network.node_count() > 0);
        assert!(r.events.iter().filter(|e| e.time > 2.0).all(|e| e.mark.new_nodes.is_empty()));
    }

    #[test]
    fn explosion_guard_returns_partial() {
        let spec = trivial(1.0, 3.0, 1.0, 100.0);
        match simulate_with(&spec, 1, SimulateOptions { max_events: 500 }) {
            Err(ProcessError::Explosion { partial, limit, .. }) => {
                assert_eq!(limit, 500);
                assert_eq!(partial.events.len(), 501);
            }
            other => panic!("expected explosion, got {other:?}"),
        }
    }

    #[test]
    fn mean_intensity_examples() {
        let m = mean_intensity_estimate(&trivial(10.0, 0.5, 2.0, 1.0)).unwrap();
        assert!((m - 40.0 / 3.0).abs() < 1e-12);
        assert_eq!(mean_intensity_estimate(&trivial(7.0, 0.0, 2.0, 1.0)).unwrap(), 7.0);
        assert!((mean_intensity_estimate(&trivial(1.0, 0.99, 1.0, 1.0)).unwrap() - 100.0).abs() < 1e-9);
        assert!(matches!(mean_intensity_estimate(&trivial(1.0, 2.0, 1.0, 1.0)), Err(ProcessError::Unstable { .. })));
        assert_eq!(branching_ratio(&trivial(1.0, 0.5, 2.0, 1.0)), 0.25);
        assert_eq!(branching_ratio(&trivial(1.0, 2.0, 1.0, 1.0)), 2.0);
    }

    #[test]
    fn joint_intensity_trivial_space() {
        let spec = trivial(3.0, 0.0, 1.0, 10.0);
        let v = joint_intensity(&spec, &[], &NodeAux::default(), 1.0, &Mark::default()).unwrap();
        assert_eq!(v, 3.0);
        // an edge between unknown nodes is not a valid addition
        let bad = Mark::new(vec![], vec![Edge::between(0, 1)]);
        assert_eq!(joint_intensity(&spec, &[], &NodeAux::default(), 1.0, &bad).unwrap(), 0.0);
    }

    #[test]
    fn joint_intensity_sums_to_ground() {
        // two old nodes, BA: marks are {new node + any subset of the two candidate edges}
        let spec = ModelSpec::new(GroundParams::new(2.0, 0.7, 1.3), MarkModelSpec::ba(0.4), 10.0);
        let history = vec![
            EventRecord::new(0.2, Mark::new(vec![NodeId(0)], vec![])),
            EventRecord::new(0.5, Mark::new(vec![NodeId(1)], vec![Edge::between(0, 1)])),
        ];
        let t = 1.1;
        let mut total = 0.0;
        for subset in 0..4u32 {
            let edges = (0..2).filter(|b| subset >> b & 1 == 1).map(|b| Edge::between(b, 2)).collect();
            total += joint_intensity(&spec, &history, &NodeAux::default(), t, &Mark::new(vec![NodeId(2)], edges)).unwrap();
        }
        let ground = ground_intensity(t, &[0.2, 0.5], &spec.ground);
        assert!((total - ground).abs() < 1e-12);
    }

    #[test]
    fn seed_splitting_is_stable() {
        assert_eq!(replication_seed(42, 0), replication_seed(42, 0));
        assert_ne!(replication_seed(42, 0), replication_seed(42, 1));
        assert_ne!(replication_seed(42, 0), replication_seed(43, 0));
    }

    #[test]
    fn mc_branching_ratio() {
        let spec = ModelSpec::new(
            GroundParams::new(5.0, 0.5, 2.0),
            MarkModelSpec::cs(vec!["edges"], vec![-1.0], 1.0, 1.0).with_scope(EdgeScope::NewNode),
            5.0,
        );
        let exp = estimate_branching_ratio_mc(DiagnosticKernel::Exponential { k: 0.5, beta: 2.0 }, &spec, 1e3, 5, 1).unwrap();
        assert!((exp.mean - 0.25).abs() < 1e-12 && exp.std_error < 1e-12 && !exp.sup_violation);
        let tri = DiagnosticKernel::TriangleFeedback { alpha: 0.5, gamma: 0.0, beta: 2.0 };
        assert!((estimate_branching_ratio_mc(tri, &spec, 1e3, 5, 1).unwrap().mean - 0.25).abs() < 1e-12);
        let tri = DiagnosticKernel::TriangleFeedback { alpha: 0.5, gamma: 5.0, beta: 2.0 };
        assert!(estimate_branching_ratio_mc(tri, &spec, 1e3, 5, 1).unwrap().mean >= 0.25);
        let pl = DiagnosticKernel::DegreePowerLaw { alpha: 1.0, c: 1.0, p: 1.0 };
        assert!(matches!(estimate_branching_ratio_mc(pl, &spec, 10.0, 2, 1), Err(ProcessError::NonIntegrableKernel(_))));
        let pl = DiagnosticKernel::DegreePowerLaw { alpha: 1.0, c: 1.0, p: 2.5 };
        assert!(estimate_branching_ratio_mc(pl, &spec, 10.0, 2, 1).unwrap().mean.is_finite());
    }

    #[test]
    fn spec_validation() {
        assert!(trivial(1.0, 0.5, 2.0, 0.0).validate().is_err());
        assert!(trivial(1.0, 0.5, 2.0, 1.0).with_cutoff(1.5).validate().is_err());
        assert!(trivial(1.0, 0.5, 2.0, 1.0).with_cutoff(1.0).validate().is_ok());
        let spec = trivial(1.0, 0.5, 2.0, 1.0).with_cutoff(0.5);
        let back: ModelSpec = serde_json::from_str(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }
}
