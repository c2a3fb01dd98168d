//! Exact log-likelihood, maximum likelihood fitting and replication studies.
//!
//! The log-likelihood splits into three parts that share no parameters:
//!
//! ```text
//! ground: sum_i ln(mu + K A_i) - mu T - (K/beta) sum_i (1 - exp(-beta (T - t_i)))
//! nodes:  sum_i ln Poisson(k_i; lambda_nodes)
//! edges:  sum_i sum_candidates ln Bernoulli(selected; p)
//! ```
//!
//! so each block is maximised on its own. Network replay happens once: every
//! event is reduced to a parameter-free [`EventDesign`] and the optimiser
//! only re-evaluates those.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynet::{DynamicNetwork, EventRecord, NetworkError};
use crate::kernel::{GroundParams, KernelError};
use crate::markmodel::{EventDesign, FeatureSupport, MarkError, MarkModel, MarkModelSpec, MarkVariant, NodeAux, ZeroLikelihood};
use crate::optim::{nelder_mead_restarts, NelderMeadOptions};
use crate::process::{replication_seed, simulate, ModelSpec, ProcessError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Mark(#[from] MarkError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("ground intensity is zero at event {index}")]
    ZeroIntensityAtEvent { index: usize },
    #[error("log-likelihood is not finite at the initial values: {0}")]
    NonFiniteLikelihoodAtInit(String),
    #[error("need at least 2 events to fit, got {0}")]
    TooFewEvents(usize),
    #[error("no free parameters")]
    NoFreeParameters,
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("negative Hessian is not positive definite")]
    SingularHessian,
    #[error("{0}")]
    InvalidOptions(String),
}

/// Which independent likelihood block a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    Ground,
    Node,
    Edge,
}

/// Optimiser coordinates of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Log,
    Identity,
    Logit,
}

impl Transform {
    fn forward(self, v: f64) -> f64 {
        match self {
            Transform::Log => v.max(1e-10).ln(),
            Transform::Identity => v,
            Transform::Logit => {
                let p = v.clamp(1e-10, 1.0 - 1e-10);
                (p / (1.0 - p)).ln()
            }
        }
    }

    fn inverse(self, x: f64) -> f64 {
        match self {
            Transform::Log => x.exp(),
            Transform::Identity => x,
            Transform::Logit => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Whether the natural-space value lies in the domain.
    fn admits(self, v: f64) -> bool {
        match self {
            Transform::Log => v > 0.0,
            Transform::Identity => v.is_finite(),
            Transform::Logit => v > 0.0 && v < 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    pub block: Block,
    pub transform: Transform,
    pub value: f64,
}

fn ls_theta_names(len: usize) -> &'static [&'static str] {
    if len == 1 {
        &["slope"]
    } else {
        &["intercept", "slope"]
    }
}

/// Every parameter of `spec` with its current value, in reporting order.
pub fn parameters(spec: &ModelSpec) -> Vec<ParamInfo> {
    let p = |name: &str, block, transform, value| ParamInfo { name: name.to_string(), block, transform, value };
    let g = &spec.ground;
    let m = &spec.mark;
    let mut out = vec![
        p("mu", Block::Ground, Transform::Log, g.mu),
        p("K", Block::Ground, Transform::Log, g.k),
        p("beta", Block::Ground, Transform::Log, g.beta),
    ];
    if m.has_node_term() {
        out.push(p("lambda_nodes", Block::Node, Transform::Log, m.lambda_nodes));
    }
    out.push(p("tau", Block::Edge, Transform::Log, m.tau));
    match m.variant {
        MarkVariant::Ba => {}
        MarkVariant::Cs => {
            for (name, &v) in m.stats.iter().zip(&m.theta) {
                out.push(p(name, Block::Edge, Transform::Identity, v));
            }
            out.push(p("nu", Block::Edge, Transform::Log, m.nu));
        }
        MarkVariant::Sbm => {
            let r = m.block_matrix.len();
            for a in 0..r {
                for b in a..r {
                    out.push(p(&format!("C[{a},{b}]"), Block::Edge, Transform::Logit, m.block_matrix[a][b]));
                }
            }
        }
        MarkVariant::Ls => {
            for (name, &v) in ls_theta_names(m.theta.len()).iter().zip(&m.theta) {
                out.push(p(name, Block::Edge, Transform::Identity, v));
            }
        }
    }
    out
}

/// Sets a named parameter on `spec`.
pub fn set_parameter(spec: &mut ModelSpec, name: &str, v: f64) -> Result<(), EstimateError> {
    let m = &mut spec.mark;
    match name {
        "mu" => spec.ground.mu = v,
        "K" => spec.ground.k = v,
        "beta" => spec.ground.beta = v,
        "lambda_nodes" if m.has_node_term() => m.lambda_nodes = v,
        "tau" => m.tau = v,
        "nu" if m.variant == MarkVariant::Cs => m.nu = v,
        _ => {
            match m.variant {
                MarkVariant::Cs => {
                    if let Some(i) = m.stats.iter().position(|s| s == name) {
                        m.theta[i] = v;
                        return Ok(());
                    }
                }
                MarkVariant::Ls => {
                    if let Some(i) = ls_theta_names(m.theta.len()).iter().position(|s| *s == name) {
                        m.theta[i] = v;
                        return Ok(());
                    }
                }
                MarkVariant::Sbm => {
                    let parsed = name
                        .strip_prefix("C[")
                        .and_then(|s| s.strip_suffix(']'))
                        .and_then(|s| s.split_once(','))
                        .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)));
                    if let Some((a, b)) = parsed {
                        if a < m.block_matrix.len() && b < m.block_matrix.len() {
                            m.block_matrix[a][b] = v;
                            m.block_matrix[b][a] = v;
                            return Ok(());
                        }
                    }
                }
                MarkVariant::Ba => {}
            }
            return Err(EstimateError::UnknownParameter(name.to_string()));
        }
    }
    Ok(())
}

/// Log-likelihood split by block, with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub total: f64,
    pub ground: f64,
    pub node: f64,
    pub edge: f64,
    /// Candidate edge probabilities that hit the clamp.
    pub clamped: usize,
    /// First event whose mark had probability zero.
    pub zero_likelihood: Option<(usize, ZeroLikelihood)>,
}

/// Observed data reduced to what the likelihood needs.
#[derive(Debug, Clone)]
pub struct LikelihoodData {
    pub times: Vec<f64>,
    pub horizon: f64,
    designs: Vec<EventDesign>,
}

impl LikelihoodData {
    /// Replays `events` once under the structure of `spec` (variant,
    /// statistics, scope, activity mode, cutoff). Parameter values in
    /// `spec` are not used.
    pub fn new(events: &[EventRecord], aux: &NodeAux, spec: &ModelSpec) -> Result<Self, EstimateError> {
        spec.validate()?;
        let model = MarkModel::new(spec.mark.clone())?;
        let mut net = DynamicNetwork::new();
        let mut designs = Vec::with_capacity(events.len());
        for ev in events {
            if ev.time > spec.horizon {
                return Err(KernelError::EventAfterHorizon { time: ev.time, horizon: spec.horizon }.into());
            }
            designs.push(model.design(&net, aux, ev.time, &ev.mark, spec.node_rate_active(ev.time))?);
            net.apply_mark(ev.time, &ev.mark)?;
        }
        Ok(LikelihoodData { times: events.iter().map(|e| e.time).collect(), horizon: spec.horizon, designs })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn ground(&self, g: &GroundParams) -> Result<f64, EstimateError> {
        ground_log_likelihood(&self.times, self.horizon, g)
    }

    pub fn node(&self, m: &MarkModelSpec) -> f64 {
        self.designs.iter().map(|d| d.node_log_prob(m)).sum()
    }

    pub fn edge(&self, m: &MarkModelSpec) -> (f64, usize) {
        self.designs.iter().fold((0.0, 0), |(s, c), d| {
            let (lp, clamped, _) = d.edge_log_prob(m);
            (s + lp, c + clamped)
        })
    }

    /// Change statistics of a CS model whose coefficient has no finite
    /// maximum-likelihood estimate on this history.
    pub fn unsupported_statistics(&self, m: &MarkModelSpec) -> Vec<String> {
        if m.variant != MarkVariant::Cs {
            return Vec::new();
        }
        let mut acc = vec![FeatureSupport::default(); m.stats.len()];
        for d in &self.designs {
            d.accumulate_support(&mut acc);
        }
        m.stats.iter().zip(&acc).filter(|(_, a)| a.one_sided()).map(|(s, _)| s.clone()).collect()
    }

    pub fn evaluate(&self, spec: &ModelSpec) -> Result<LogLikelihood, EstimateError> {
        let ground = self.ground(&spec.ground)?;
        let mut node = 0.0;
        let mut edge = 0.0;
        let mut clamped = 0;
        let mut zero_likelihood = None;
        for (i, d) in self.designs.iter().enumerate() {
            let lp = d.log_prob(&spec.mark);
            node += d.node_log_prob(&spec.mark);
            edge += lp.log_prob - d.node_log_prob(&spec.mark);
            clamped += lp.clamped;
            if let (None, Some(z)) = (zero_likelihood, lp.zero_likelihood) {
                zero_likelihood = Some((i, z));
            }
        }
        Ok(LogLikelihood { total: ground + node + edge, ground, node, edge, clamped, zero_likelihood })
    }
}

/// Ground part of the log-likelihood, `sum ln(mu + K A_i) - compensator(T)`.
pub fn ground_log_likelihood(times: &[f64], horizon: f64, g: &GroundParams) -> Result<f64, EstimateError> {
    let mut a = 0.0;
    let mut sum_log = 0.0;
    let mut comp = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            a = (-g.beta * (t - times[i - 1])).exp() * (1.0 + a);
        }
        let rate = g.mu + g.k * a;
        if !(rate > 0.0) {
            return Err(EstimateError::ZeroIntensityAtEvent { index: i });
        }
        sum_log += rate.ln();
        comp += -(-g.beta * (horizon - t)).exp_m1();
    }
    Ok(sum_log - g.mu * horizon - g.k / g.beta * comp)
}

/// Full log-likelihood of `events` (with node covariates `aux`) under `spec`.
pub fn log_likelihood(events: &[EventRecord], aux: &NodeAux, spec: &ModelSpec) -> Result<LogLikelihood, EstimateError> {
    LikelihoodData::new(events, aux, spec)?.evaluate(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeMethod {
    Hessian,
    Replication,
}

impl SeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SeMethod::Hessian => "hessian",
            SeMethod::Replication => "replication",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StdErrorMethod {
    None,
    Hessian,
    Replication { reps: usize },
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Parameters held at their starting value.
    pub fixed: BTreeSet<String>,
    /// Starting values overriding those of the model family spec.
    pub init: Vec<(String, f64)>,
    /// Evaluation budget of each simplex run.
    pub max_evals: usize,
    pub restarts: usize,
    /// Seed for restart perturbations.
    pub seed: u64,
    pub std_errors: StdErrorMethod,
    /// Reps used when the Hessian is singular and replication is the fallback.
    pub fallback_reps: usize,
    /// Estimate `nu` as well (CS); held fixed otherwise.
    pub fit_nu: bool,
    /// Optimise in log/logit coordinates; when off, every parameter is searched
    /// on its natural scale and out-of-domain points are rejected.
    pub transform: bool,
    pub jobs: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            fixed: BTreeSet::new(),
            init: Vec::new(),
            max_evals: 20_000,
            restarts: 5,
            seed: 0,
            std_errors: StdErrorMethod::Hessian,
            fallback_reps: 20,
            fit_nu: false,
            transform: true,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<ParamEstimate>,
    pub se_method: Option<SeMethod>,
    pub loglik: f64,
    pub loglik_init: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub clamp_events: usize,
    pub spec: ModelSpec,
    pub n_events: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).and_then(|p| p.std_error)
    }

    pub fn free_count(&self) -> usize {
        self.params.iter().filter(|p| !p.fixed).count()
    }
}

struct BlockFit {
    values: Vec<f64>,
    evals: usize,
    converged: bool,
}

/// Maximises `loglik` over the given parameters from their current values.
fn fit_block<F: Fn(&[f64]) -> f64>(
    infos: &[ParamInfo],
    loglik: F,
    opts: &FitOptions,
    stream: u64,
) -> BlockFit {
    let transforms: Vec<Transform> = infos
        .iter()
        .map(|p| if opts.transform { p.transform } else { Transform::Identity })
        .collect();
    let natural_domain: Vec<Transform> = infos.iter().map(|p| p.transform).collect();
    let x0: Vec<f64> = infos.iter().zip(&transforms).map(|(p, t)| t.forward(p.value)).collect();
    let to_natural = |x: &[f64]| -> Vec<f64> { x.iter().zip(&transforms).map(|(v, t)| t.inverse(*v)).collect() };
    let objective = |x: &[f64]| {
        let v = to_natural(x);
        if v.iter().zip(&natural_domain).any(|(v, t)| !t.admits(*v)) {
            return f64::INFINITY;
        }
        let ll = loglik(&v);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let nm = NelderMeadOptions { max_evals: opts.max_evals, ..Default::default() };
    let step = if opts.transform { 0.5 } else { 0.1 };
    let best = nelder_mead_restarts(objective, &x0, &nm, opts.restarts, step, &mut rng);
    BlockFit { values: to_natural(&best.x), evals: best.evals, converged: best.converged }
}

/// Maximum likelihood fit of the model family `family` (structure plus
/// starting values) to `events`.
pub fn fit_mle(
    events: &[EventRecord],
    aux: &NodeAux,
    family: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult, EstimateError> {
    if events.len() < 2 {
        return Err(EstimateError::TooFewEvents(events.len()));
    }
    let mut start = family.clone();
    for (name, v) in &opts.init {
        set_parameter(&mut start, name, *v)?;
    }
    let data = LikelihoodData::new(events, aux, &start)?;
    fit_prepared(&data, &start, opts, events, aux)
}

fn free_parameters(start: &ModelSpec, opts: &FitOptions) -> Result<Vec<ParamInfo>, EstimateError> {
    let all = parameters(start);
    for name in &opts.fixed {
        if !all.iter().any(|p| &p.name == name) {
            return Err(EstimateError::UnknownParameter(name.clone()));
        }
    }
    Ok(all
        .into_iter()
        .filter(|p| !opts.fixed.contains(&p.name))
        .filter(|p| !(p.name == "nu" && !opts.fit_nu))
        .collect())
}

fn block_loglik(data: &LikelihoodData, base: &ModelSpec, infos: &[ParamInfo], v: &[f64], block: Block) -> f64 {
    let mut spec = base.clone();
    for (p, &x) in infos.iter().zip(v) {
        set_parameter(&mut spec, &p.name, x).expect("known parameter");
    }
    match block {
        Block::Ground => data.ground(&spec.ground).unwrap_or(f64::NEG_INFINITY),
        Block::Node => data.node(&spec.mark),
        Block::Edge => data.edge(&spec.mark).0,
    }
}

fn fit_prepared(
    data: &LikelihoodData,
    start: &ModelSpec,
    opts: &FitOptions,
    events: &[EventRecord],
    aux: &NodeAux,
) -> Result<FitResult, EstimateError> {
    let free = free_parameters(start, opts)?;
    if free.is_empty() {
        return Err(EstimateError::NoFreeParameters);
    }
    let init = data.evaluate(start)?;
    if !init.total.is_finite() {
        let why = match init.zero_likelihood {
            Some((i, ZeroLikelihood::Edge)) => format!("event {i} has an edge of probability zero"),
            Some((i, ZeroLikelihood::NodeCount)) => format!("event {i} has a node count of probability zero"),
            None => format!("log-likelihood = {}", init.total),
        };
        return Err(EstimateError::NonFiniteLikelihoodAtInit(why));
    }
    let mut fitted = start.clone();
    let mut iterations = 0;
    let mut converged = true;
    let mut warnings = Vec::new();
    for (stream, block) in [Block::Ground, Block::Node, Block::Edge].into_iter().enumerate() {
        let infos: Vec<ParamInfo> = free.iter().filter(|p| p.block == block).cloned().collect();
        if infos.is_empty() {
            continue;
        }
        let bf = fit_block(&infos, |v| block_loglik(data, start, &infos, v, block), opts, stream as u64);
        iterations += bf.evals;
        if !bf.converged {
            converged = false;
            warnings.push(format!("{block:?} block did not converge within the evaluation budget"));
        }
        for (p, v) in infos.iter().zip(&bf.values) {
            set_parameter(&mut fitted, &p.name, *v)?;
        }
    }
    for name in data.unsupported_statistics(&start.mark) {
        if free.iter().any(|p| p.name == name) {
            converged = false;
            warnings.push(format!("no finite estimate for {name}: no chosen edge changes this statistic"));
        }
    }
    let fin = data.evaluate(&fitted)?;
    if fin.clamped > 0 {
        warnings.push(format!("{} candidate edge probabilities were clamped at the estimate", fin.clamped));
    }
    let k = free.len();
    let mut result = FitResult {
        params: parameters(&fitted)
            .into_iter()
            .map(|p| {
                let fixed = !free.iter().any(|f| f.name == p.name);
                ParamEstimate { name: p.name, value: p.value, std_error: None, fixed }
            })
            .collect(),
        se_method: None,
        loglik: fin.total,
        loglik_init: init.total,
        aic: 2.0 * k as f64 - 2.0 * fin.total,
        converged,
        iterations,
        clamp_events: fin.clamped,
        spec: fitted,
        n_events: data.len(),
        warnings,
    };
    match opts.std_errors {
        StdErrorMethod::None => {}
        StdErrorMethod::Hessian => match hessian_errors(data, &result.spec, &free) {
            Ok(se) => attach(&mut result, &se, SeMethod::Hessian),
            Err(EstimateError::SingularHessian) => {
                result.warnings.push("Hessian is singular; falling back to replication standard errors".into());
                let se = replication_std_errors(events, aux, &result, opts, opts.fallback_reps)?;
                attach(&mut result, &se, SeMethod::Replication);
            }
            Err(e) => return Err(e),
        },
        StdErrorMethod::Replication { reps } => {
            let se = replication_std_errors(events, aux, &result, opts, reps)?;
            attach(&mut result, &se, SeMethod::Replication);
        }
    }
    if !result.converged && result.se_method.is_some() {
        result.warnings.push("standard errors computed at a point that did not meet the convergence criterion".into());
    }
    Ok(result)
}

fn attach(result: &mut FitResult, se: &[(String, f64)], method: SeMethod) {
    for (name, v) in se {
        if let Some(p) = result.params.iter_mut().find(|p| &p.name == name) {
            p.std_error = Some(*v);
        }
    }
    result.se_method = Some(method);
}

/// Standard errors `sqrt(diag((-H)^-1))` from a central-difference Hessian
/// of `loglik` at `x`. Entries of `positive` must stay positive when stepped.
pub fn hessian_std_errors<F: Fn(&[f64]) -> f64>(loglik: F, x: &[f64], positive: &[bool]) -> Result<Vec<f64>, EstimateError> {
    let n = x.len();
    let h: Vec<f64> = x
        .iter()
        .zip(positive)
        .map(|(&v, &pos)| {
            let step = 1e-4 * v.abs().max(1e-2);
            if pos {
                step.min(0.25 * v)
            } else {
                step
            }
        })
        .collect();
    let f = |dx: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, d) in dx {
            y[i] += d;
        }
        loglik(&y)
    };
    let f0 = loglik(x);
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = (f(&[(i, h[i])]) - 2.0 * f0 + f(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (f(&[(i, h[i]), (j, h[j])]) - f(&[(i, h[i]), (j, -h[j])]) - f(&[(i, -h[i]), (j, h[j])])
                + f(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(EstimateError::SingularHessian);
    }
    let info = -hess;
    let chol = info.cholesky().ok_or(EstimateError::SingularHessian)?;
    let cov = chol.inverse();
    (0..n)
        .map(|i| {
            let v = cov[(i, i)];
            if v > 0.0 && v.is_finite() {
                Ok(v.sqrt())
            } else {
                Err(EstimateError::SingularHessian)
            }
        })
        .collect()
}

fn hessian_errors(data: &LikelihoodData, at: &ModelSpec, free: &[ParamInfo]) -> Result<Vec<(String, f64)>, EstimateError> {
    let mut out = Vec::new();
    for block in [Block::Ground, Block::Node, Block::Edge] {
        let infos: Vec<ParamInfo> = free
            .iter()
            .filter(|p| p.block == block)
            .map(|p| ParamInfo { value: parameters(at).into_iter().find(|q| q.name == p.name).expect("known").value, ..p.clone() })
            .collect();
        if infos.is_empty() {
            continue;
        }
        let x: Vec<f64> = infos.iter().map(|p| p.value).collect();
        let positive: Vec<bool> = infos.iter().map(|p| p.transform != Transform::Identity).collect();
        let se = hessian_std_errors(|v| block_loglik(data, at, &infos, v, block), &x, &positive)?;
        out.extend(infos.iter().map(|p| p.name.clone()).zip(se));
    }
    Ok(out)
}

fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some((xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Parametric bootstrap standard errors: refits on `reps` datasets simulated
/// from the fitted model.
fn replication_std_errors(
    _events: &[EventRecord],
    _aux: &NodeAux,
    fit: &FitResult,
    opts: &FitOptions,
    reps: usize,
) -> Result<Vec<(String, f64)>, EstimateError> {
    let sub = FitOptions { std_errors: StdErrorMethod::None, ..opts.clone() };
    let summary = replicate_experiment(&fit.spec, reps, opts.seed, &ReplicateOptions { fit: sub, jobs: opts.jobs })?;
    Ok(summary.rows.iter().filter_map(|r| r.sd.map(|sd| (r.parameter.clone(), sd))).collect())
}

#[derive(Debug, Clone)]
pub struct ReplicateOptions {
    pub fit: FitOptions,
    pub jobs: usize,
}

impl Default for ReplicateOptions {
    fn default() -> Self {
        ReplicateOptions { fit: FitOptions { std_errors: StdErrorMethod::None, ..Default::default() }, jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub parameter: String,
    pub truth: f64,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub seed: u64,
    pub outcome: Result<ReplicateFit, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub estimates: Vec<f64>,
    pub loglik: f64,
    pub loglik_truth: f64,
    pub converged: bool,
    pub n_events: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    /// Free parameters, in reporting order.
    pub parameters: Vec<String>,
    pub rows: Vec<SummaryRow>,
    pub replicates: Vec<Replicate>,
    pub warnings: Vec<String>,
}

impl ReplicationSummary {
    pub fn failures(&self) -> usize {
        self.replicates.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Estimates of `name` across successful replicates.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.parameters.iter().position(|p| p == name) else {
            return Vec::new();
        };
        self.replicates.iter().filter_map(|r| r.outcome.as_ref().ok().map(|f| f.estimates[j])).collect()
    }

    /// Delimited table with columns parameter, truth, mean, sd, failures.
    pub fn to_table(&self, delim: char) -> String {
        let mut out = ["parameter", "truth", "mean", "sd", "failures"].join(&delim.to_string());
        out.push('\n');
        let num = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.rows {
            let cells = [r.parameter.clone(), format!("{:.6}", r.truth), num(r.mean), num(r.sd), r.failures.to_string()];
            out.push_str(&cells.join(&delim.to_string()));
            out.push('\n');
        }
        out
    }
}

fn run_replicate(truth: &ModelSpec, seed: u64, fit: &FitOptions, free: &[ParamInfo]) -> Result<ReplicateFit, String> {
    let r = simulate(truth, seed).map_err(|e| e.to_string())?;
    let opts = FitOptions { seed, ..fit.clone() };
    let data = LikelihoodData::new(&r.events, &r.aux, truth).map_err(|e| e.to_string())?;
    let loglik_truth = data.evaluate(truth).map_err(|e| e.to_string())?.total;
    let res = fit_prepared(&data, truth, &opts, &r.events, &r.aux).map_err(|e| e.to_string())?;
    Ok(ReplicateFit {
        estimates: free.iter().map(|p| res.estimate(&p.name).expect("free parameter")).collect(),
        loglik: res.loglik,
        loglik_truth,
        converged: res.converged,
        n_events: r.events.len(),
        n_nodes: r.network.node_count(),
        n_edges: r.network.edge_count(),
    })
}

/// Simulates `reps` datasets from `truth` and fits each, starting from the
/// truth. Replicate `i` uses seed `replication_seed(master_seed, i)` for
/// both simulation and restarts, so the output does not depend on `jobs`.
pub fn replicate_experiment(
    truth: &ModelSpec,
    reps: usize,
    master_seed: u64,
    opts: &ReplicateOptions,
) -> Result<ReplicationSummary, EstimateError> {
    if reps == 0 {
        return Err(EstimateError::InvalidOptions("reps must be >= 1".into()));
    }
    truth.validate()?;
    let free = free_parameters(truth, &opts.fit)?;
    if free.is_empty() {
        return Err(EstimateError::NoFreeParameters);
    }
    let seeds: Vec<u64> = (0..reps as u64).map(|i| replication_seed(master_seed, i)).collect();
    let run = |&seed: &u64| Replicate { seed, outcome: run_replicate(truth, seed, &opts.fit, &free) };
    let replicates: Vec<Replicate> = if opts.jobs <= 1 {
        seeds.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| EstimateError::InvalidOptions(e.to_string()))?;
        pool.install(|| seeds.par_iter().map(run).collect())
    };
    let failures = replicates.iter().filter(|r| r.outcome.is_err()).count();
    let mut warnings = Vec::new();
    if failures > 0 {
        warnings.push(format!("{failures} of {reps} replications failed"));
    }
    if reps - failures < 2 {
        warnings.push("fewer than 2 successful replications: sd is undefined".into());
    }
    let rows = free
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let xs: Vec<f64> =
                replicates.iter().filter_map(|r| r.outcome.as_ref().ok().map(|f| f.estimates[j])).collect();
            SummaryRow {
                parameter: p.name.clone(),
                truth: p.value,
                mean: (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64),
                sd: sample_sd(&xs),
                failures,
            }
        })
        .collect();
    Ok(ReplicationSummary { parameters: free.iter().map(|p| p.name.clone()).collect(), rows, replicates, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundFit {
    pub params: GroundParams,
    pub loglik: f64,
    pub converged: bool,
}

/// Fits only `(mu, K, beta)` to a sequence of event times.
pub fn fit_ground(times: &[f64], horizon: f64, init: GroundParams, opts: &FitOptions) -> Result<GroundFit, EstimateError> {
    if times.len() < 2 {
        return Err(EstimateError::TooFewEvents(times.len()));
    }
    init.validate()?;
    let ll0 = ground_log_likelihood(times, horizon, &init)?;
    if !ll0.is_finite() {
        return Err(EstimateError::NonFiniteLikelihoodAtInit(format!("log-likelihood = {ll0}")));
    }
    let names = ["mu", "K", "beta"];
    let values = [init.mu, init.k, init.beta];
    let infos: Vec<ParamInfo> = names
        .iter()
        .zip(values)
        .filter(|(n, _)| !opts.fixed.contains(**n))
        .map(|(n, v)| ParamInfo { name: n.to_string(), block: Block::Ground, transform: Transform::Log, value: v })
        .collect();
    let assemble = |v: &[f64]| {
        let mut g = init;
        for (p, &x) in infos.iter().zip(v) {
            match p.name.as_str() {
                "mu" => g.mu = x,
                "K" => g.k = x,
                _ => g.beta = x,
            }
        }
        g
    };
    let bf = fit_block(&infos, |v| ground_log_likelihood(times, horizon, &assemble(v)).unwrap_or(f64::NEG_INFINITY), opts, 0);
    let params = assemble(&bf.values);
    Ok(GroundFit { params, loglik: ground_log_likelihood(times, horizon, &params)?, converged: bf.converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynet::{Edge, Mark, NodeId};
    use crate::kernel::ground_intensity;
    use crate::markmodel::{ActivityMode, EdgeScope};

    fn cs_spec(horizon: f64) -> ModelSpec {
        ModelSpec::new(
            GroundParams::new(6.0, 0.5, 2.0),
            MarkModelSpec::cs(vec!["edges", "triangles", "2-star"], vec![-2.0, 0.3, 0.1], 0.5, 1.0),
            horizon,
        )
    }

    /// Adaptive Simpson quadrature.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
    }

    #[test]
    fn empty_history_is_minus_mu_t() {
        let spec = ModelSpec::new(GroundParams::new(3.0, 0.5, 2.0), MarkModelSpec::trivial(), 7.0);
        assert_eq!(log_likelihood(&[], &NodeAux::default(), &spec).unwrap().total, -21.0);
    }

    #[test]
    fn poisson_case() {
        let spec = ModelSpec::new(GroundParams::new(2.5, 0.0, 1.0), MarkModelSpec::trivial(), 4.0);
        let events: Vec<_> = [0.5, 1.2, 3.3].iter().map(|&t| EventRecord::new(t, Mark::default())).collect();
        let ll = log_likelihood(&events, &NodeAux::default(), &spec).unwrap().total;
        assert!((ll - (3.0 * 2.5f64.ln() - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_intensity_is_an_error() {
        let spec = ModelSpec::new(GroundParams::new(0.0, 0.0, 1.0), MarkModelSpec::trivial(), 4.0);
        let events = vec![EventRecord::new(0.5, Mark::default())];
        assert_eq!(
            log_likelihood(&events, &NodeAux::default(), &spec),
            Err(EstimateError::ZeroIntensityAtEvent { index: 0 })
        );
    }

    #[test]
    fn matches_naive_evaluation() {
        let spec = cs_spec(3.0);
        let r = simulate(&spec, 17).unwrap();
        assert!(r.events.len() >= 10 && r.events.len() <= 200);
        let fast = log_likelihood(&r.events, &r.aux, &spec).unwrap().total;

        // naive: direct sums, quadrature compensator, candidate-by-candidate marks
        let times = r.times();
        let mut naive = 0.0;
        let mut net = DynamicNetwork::new();
        let model = MarkModel::new(spec.mark.clone()).unwrap();
        for ev in &r.events {
            naive += ground_intensity(ev.time, &times, &spec.ground).ln();
            let set = model.candidates(&net, &r.aux, ev.time, &vec![crate::markmodel::AuxRecord::None; ev.mark.new_nodes.len()]).unwrap();
            let (probs, _) = crate::markmodel::edge_probabilities(&model, &set);
            for (e, p) in set.edges.iter().zip(&probs) {
                naive += if ev.mark.new_edges.contains(e) { p.ln() } else { (1.0 - p).ln() };
            }
            naive += crate::markmodel::poisson_ln_pmf(ev.mark.new_nodes.len(), spec.mark.lambda_nodes);
            net.apply_mark(ev.time, &ev.mark).unwrap();
        }
        let mut comp = 0.0;
        let mut knots = vec![0.0];
        knots.extend(times.iter().copied());
        knots.push(spec.horizon);
        for w in knots.windows(2) {
            comp += simpson(&|t| ground_intensity(t, &times, &spec.ground), w[0], w[1], 1e-12);
        }
        naive -= comp;
        assert!((fast - naive).abs() < 1e-6, "{fast} vs {naive}");
    }

    #[test]
    fn shift_changes_only_background_lead_in() {
        let spec = cs_spec(3.0);
        let r = simulate(&spec, 4).unwrap();
        let c = 1.75;
        let shifted: Vec<_> = r.events.iter().map(|e| EventRecord::new(e.time + c, e.mark.clone())).collect();
        let spec_shifted = ModelSpec { horizon: spec.horizon + c, ..spec.clone() };
        let a = log_likelihood(&r.events, &r.aux, &spec).unwrap();
        let b = log_likelihood(&shifted, &r.aux, &spec_shifted).unwrap();
        assert!((a.edge - b.edge).abs() < 1e-9 && (a.node - b.node).abs() < 1e-12);
        assert!((b.ground - (a.ground - spec.ground.mu * c)).abs() < 1e-9);
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        // ll = -(x-1)^2/(2 s1^2) - (y+2)^2/(2 s2^2)
        let (s1, s2) = (0.3, 2.0);
        let ll = |v: &[f64]| -(v[0] - 1.0).powi(2) / (2.0 * s1 * s1) - (v[1] + 2.0).powi(2) / (2.0 * s2 * s2);
        let se = hessian_std_errors(ll, &[1.0, -2.0], &[false, false]).unwrap();
        assert!((se[0] - s1).abs() < 1e-6 && (se[1] - s2).abs() < 1e-6);
        assert_eq!(hessian_std_errors(|v: &[f64]| v[0], &[1.0], &[false]), Err(EstimateError::SingularHessian));
    }

    #[test]
    fn parameter_names_round_trip() {
        let mut spec = ModelSpec::new(
            GroundParams::new(1.0, 0.5, 2.0),
            MarkModelSpec::sbm(vec![0.5, 0.5], vec![vec![0.5, 0.1], vec![0.1, 0.4]], 0.3, 1.0),
            5.0,
        );
        let names: Vec<_> = parameters(&spec).into_iter().map(|p| p.name).collect();
        assert_eq!(names, ["mu", "K", "beta", "lambda_nodes", "tau", "C[0,0]", "C[0,1]", "C[1,1]"]);
        set_parameter(&mut spec, "C[0,1]", 0.2).unwrap();
        assert_eq!(spec.mark.block_matrix[1][0], 0.2);
        assert!(set_parameter(&mut spec, "bogus", 1.0).is_err());
        let ba = ModelSpec::new(GroundParams::new(1.0, 0.5, 2.0), MarkModelSpec::ba(0.5), 5.0);
        assert_eq!(parameters(&ba).len(), 4);
    }

    #[test]
    fn ground_fit_beats_truth_and_has_zero_gradient() {
        let spec = ModelSpec::new(GroundParams::new(5.0, 1.0, 2.0), MarkModelSpec::trivial(), 60.0);
        let r = simulate(&spec, 21).unwrap();
        let times = r.times();
        let fit = fit_ground(&times, spec.horizon, spec.ground, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.loglik >= ground_log_likelihood(&times, spec.horizon, &spec.ground).unwrap());
        let x = [fit.params.mu.ln(), fit.params.k.ln(), fit.params.beta.ln()];
        let f = |x: &[f64]| ground_log_likelihood(&times, spec.horizon, &GroundParams::new(x[0].exp(), x[1].exp(), x[2].exp())).unwrap();
        for i in 0..3 {
            let h = 1e-5;
            let (mut a, mut b) = (x, x);
            a[i] += h;
            b[i] -= h;
            assert!(((f(&a) - f(&b)) / (2.0 * h)).abs() < 1e-3);
        }
    }

    #[test]
    fn node_rate_mle_is_closed_form() {
        let spec = cs_spec(4.0);
        let r = simulate(&spec, 2).unwrap();
        let opts = FitOptions { std_errors: StdErrorMethod::None, restarts: 1, ..Default::default() };
        let fit = fit_mle(&r.events, &r.aux, &spec, &opts).unwrap();
        let total: usize = r.events.iter().map(|e| e.mark.new_nodes.len()).sum();
        let closed = total as f64 / r.events.len() as f64;
        assert!((fit.estimate("lambda_nodes").unwrap() - closed).abs() < 1e-6);
        assert!(fit.loglik >= fit.loglik_init);
        assert!((fit.aic - (2.0 * fit.free_count() as f64 - 2.0 * fit.loglik)).abs() < 1e-9);
        assert!(fit.params.iter().find(|p| p.name == "nu").unwrap().fixed);
    }

    #[test]
    fn hessian_and_replication_errors_agree_in_order() {
        let spec = ModelSpec::new(GroundParams::new(8.0, 0.5, 2.0), MarkModelSpec::ba(0.5), 20.0);
        let r = simulate(&spec, 9).unwrap();
        let opts = FitOptions { restarts: 1, fixed: ["mu", "K", "beta"].iter().map(|s| s.to_string()).collect(), ..Default::default() };
        let h = fit_mle(&r.events, &r.aux, &spec, &opts).unwrap();
        let rep = fit_mle(&r.events, &r.aux, &spec, &FitOptions { std_errors: StdErrorMethod::Replication { reps: 12 }, ..opts }).unwrap();
        assert_eq!(h.se_method, Some(SeMethod::Hessian));
        assert_eq!(rep.se_method, Some(SeMethod::Replication));
        let ratio = h.std_error("tau").unwrap() / rep.std_error("tau").unwrap();
        assert!((0.2..=5.0).contains(&ratio), "ratio {ratio}");
        assert!(h.std_error("mu").is_none());
    }

    #[test]
    fn replicate_is_deterministic_and_job_independent() {
        let spec = ModelSpec::new(
            GroundParams::new(5.0, 0.5, 2.0),
            MarkModelSpec::cs(vec!["edges"], vec![-1.5], 0.5, 1.0).with_scope(EdgeScope::NewNode),
            4.0,
        );
        let opts = ReplicateOptions { fit: FitOptions { restarts: 1, std_errors: StdErrorMethod::None, ..Default::default() }, jobs: 1 };
        let a = replicate_experiment(&spec, 3, 77, &opts).unwrap();
        let b = replicate_experiment(&spec, 3, 77, &ReplicateOptions { jobs: 3, ..opts.clone() }).unwrap();
        assert_eq!(a.to_table('\t'), b.to_table('\t'));
        assert!(a.to_table('\t').starts_with("parameter\ttruth\tmean\tsd\tfailures\n"));
        let one = replicate_experiment(&spec, 1, 77, &opts).unwrap();
        assert!(one.rows.iter().all(|r| r.sd.is_none()));
        assert!(!one.warnings.is_empty());
        for rep in &a.replicates {
            let f = rep.outcome.as_ref().unwrap();
            assert!(f.loglik >= f.loglik_truth - 1e-9);
        }
    }

    #[test]
    fn invalid_fit_inputs() {
        let spec = cs_spec(4.0);
        let one = vec![EventRecord::new(0.5, Mark::new(vec![NodeId(0)], vec![]))];
        assert_eq!(fit_mle(&one, &NodeAux::default(), &spec, &FitOptions::default()).unwrap_err(), EstimateError::TooFewEvents(1));
        let events = vec![
            EventRecord::new(0.5, Mark::new(vec![NodeId(0), NodeId(1)], vec![Edge::between(0, 1)])),
            EventRecord::new(0.9, Mark::default()),
        ];
        let all: BTreeSet<String> = parameters(&spec).into_iter().map(|p| p.name).collect();
        let opts = FitOptions { fixed: all, ..Default::default() };
        assert_eq!(fit_mle(&events, &NodeAux::default(), &spec, &opts).unwrap_err(), EstimateError::NoFreeParameters);
        // BA edge to a degree-0 node has probability zero at any parameter
        let ba = ModelSpec::new(GroundParams::new(1.0, 0.5, 2.0), MarkModelSpec::ba(0.5).with_activity(ActivityMode::LastEdge), 5.0);
        let events = vec![
            EventRecord::new(0.1, Mark::new(vec![NodeId(0)], vec![])),
            EventRecord::new(0.2, Mark::new(vec![NodeId(1)], vec![])),
            EventRecord::new(0.3, Mark::new(vec![NodeId(2)], vec![Edge::between(0, 2)])),
            EventRecord::new(0.4, Mark::new(vec![NodeId(3)], vec![Edge::between(1, 3)])),
        ];
        assert!(matches!(
            fit_mle(&events, &NodeAux::default(), &ba, &FitOptions::default()),
            Err(EstimateError::NonFiniteLikelihoodAtInit(_))
        ));
    }

    #[test]
    fn statistic_without_support_is_flagged() {
        let mark = MarkModelSpec::cs(vec!["edges", "triangles", "2-star"], vec![-1.0, 0.5, 0.2], 0.5, 1.0);
        let spec = ModelSpec::new(GroundParams::new(2.0, 0.5, 2.0), mark, 3.0);
        let events = vec![
            EventRecord::new(0.1, Mark::new(vec![NodeId(0), NodeId(1), NodeId(2)], vec![])),
            EventRecord::new(0.5, Mark::new(vec![], vec![Edge::between(0, 1)])),
            EventRecord::new(1.0, Mark::new(vec![], vec![Edge::between(0, 2)])),
            EventRecord::new(1.5, Mark::default()),
            EventRecord::new(2.0, Mark::default()),
        ];
        let data = LikelihoodData::new(&events, &NodeAux::default(), &spec).unwrap();
        assert_eq!(data.unsupported_statistics(&spec.mark), vec!["triangles".to_string()]);
        let opts = FitOptions { restarts: 0, std_errors: StdErrorMethod::None, ..Default::default() };
        let fit = fit_mle(&events, &NodeAux::default(), &spec, &opts).unwrap();
        assert!(!fit.converged);
        assert!(fit.warnings.iter().any(|w| w.contains("triangles")));
        let fixed = FitOptions { fixed: ["triangles".to_string()].into(), ..opts };
        assert!(fit_mle(&events, &NodeAux::default(), &spec, &fixed).unwrap().warnings.iter().all(|w| !w.contains("triangles")));
    }
}
