//! Run configuration and the commands behind the `hawkesnet` binary.
//!
//! Each `cmd_*` function does its own file IO and returns the text meant for
//! standard output plus diagnostic lines for standard error, so the binary
//! only parses flags and sets the exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynet::{degree_distribution, esp_distribution, summary_statistics, Histogram};
use crate::estimate::{fit_mle, replicate_experiment, FitOptions, FitResult, ReplicateOptions, StdErrorMethod};
use crate::gof::{bootstrap_pvalue, time_change_test, BootstrapOptions, KsMethod, MARK_CAVEAT};
use crate::ingest::{contacts_to_events, format_time, parse_contacts, parse_events, write_events, ConvertOptions, EventStream};
use crate::kernel::GroundParams;
use crate::markmodel::{ActivityMode, EdgeScope, MarkModelSpec, MarkVariant};
use crate::process::{branching_ratio, simulate, ModelSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {key}: {msg}")]
    Config { key: String, msg: String },
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("{0}")]
    Model(String),
}

impl CliError {
    /// 1 for model or runtime failures, 2 for usage and IO errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(_) => 1,
            _ => 2,
        }
    }

    fn config(key: &str, msg: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), msg: msg.into() }
    }

    fn model(e: impl std::fmt::Display) -> Self {
        CliError::Model(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.into(), msg: e.to_string() })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.into(), msg: e.to_string() })?;
    }
    fs::write(path, text).map_err(|e| CliError::Io { path: path.into(), msg: e.to_string() })
}

fn read_stream(path: &Path) -> Result<EventStream, CliError> {
    parse_events(&read_file(path)?).map_err(|e| CliError::Io { path: path.into(), msg: e.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundConfig {
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: f64,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig { mu: 10.0, k: 0.5, beta: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarkConfig {
    pub model: MarkVariant,
    pub tau: f64,
    pub lambda_nodes: f64,
    pub nu: f64,
    pub stats: Option<Vec<String>>,
    pub theta: Option<Vec<f64>>,
    pub block_probs: Option<Vec<f64>>,
    pub block_matrix: Option<Vec<Vec<f64>>>,
    pub latent_dim: usize,
    pub latent_scale: f64,
    pub edge_scope: Option<EdgeScope>,
    pub activity: ActivityMode,
    pub node_cutoff: Option<f64>,
}

impl Default for MarkConfig {
    fn default() -> Self {
        MarkConfig {
            model: MarkVariant::Ba,
            tau: 0.5,
            lambda_nodes: 1.0,
            nu: 0.0,
            stats: None,
            theta: None,
            block_probs: None,
            block_matrix: None,
            latent_dim: 2,
            latent_scale: 1.0,
            edge_scope: None,
            activity: ActivityMode::Arrival,
            node_cutoff: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdErrorChoice {
    None,
    Hessian,
    Replication,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_evals: usize,
    pub restarts: usize,
    pub std_errors: StdErrorChoice,
    pub se_reps: usize,
    pub fit_nu: bool,
    pub transform: bool,
    pub fixed: Vec<String>,
    pub reps: usize,
    pub jobs: usize,
    pub bootstrap: usize,
    pub full_refit: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_evals: 20_000,
            restarts: 5,
            std_errors: StdErrorChoice::Hessian,
            se_reps: 20,
            fit_nu: false,
            transform: true,
            fixed: Vec::new(),
            reps: 100,
            jobs: 1,
            bootstrap: 0,
            full_refit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedsConfig {
    pub master: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub out: Option<PathBuf>,
}

/// The full run configuration; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub horizon: f64,
    pub ground: GroundConfig,
    pub mark: MarkConfig,
    pub optimizer: OptimizerConfig,
    pub seeds: SeedsConfig,
    pub io: IoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            horizon: 100.0,
            ground: GroundConfig::default(),
            mark: MarkConfig::default(),
            optimizer: OptimizerConfig::default(),
            seeds: SeedsConfig::default(),
            io: IoConfig::default(),
        }
    }
}

/// Annotated default configuration printed by `--explain`.
pub const EXPLAIN: &str = r#"# hawkesnet run configuration (TOML). Every key is optional; shown values are defaults.
# Command-line flags override the file.

horizon = 100.0            # observation window [0, T]; `fit` takes T from the event file

[ground]                   # intensity mu + K * sum exp(-beta (t - t_i))
mu = 10.0
K = 0.5
beta = 2.0

[mark]
model = "ba"               # ba | cs | sbm | ls                      (--model)
tau = 0.5                  # edge decay rate
lambda_nodes = 1.0         # Poisson mean of new nodes per event (cs, sbm, ls)
nu = 0.0                   # cs: additive offset on the decay term
# stats = ["edges", "triangles", "2-star", "3-star"]         cs default
# theta = [-6.0, 0.5, 0.3, -0.1]                             cs default; ls default [1.0, -2.0]
# block_probs = [0.5, 0.5]                                   sbm default
# block_matrix = [[0.3, 0.05], [0.05, 0.3]]                  sbm default
latent_dim = 2             # ls: dimension of node positions
latent_scale = 1.0         # ls: sd of node positions
# edge_scope = "new-node"  # new-node | all-pairs; default all-pairs for cs (--edge-scope)
activity = "arrival"       # arrival | last-edge                     (--activity)
# node_cutoff = 0.5        # no new nodes after this fraction of T   (--node-cutoff)

[optimizer]
max_evals = 20000          # budget per simplex run
restarts = 5
std_errors = "hessian"     # none | hessian | replication
se_reps = 20               # replications for replication standard errors
fit_nu = false
transform = true           # search in log/logit coordinates
fixed = []                 # parameter names held at their starting value
reps = 100                 # replicate: number of replications      (--reps)
jobs = 1                   # replicate, gof bootstrap: threads       (--jobs)
bootstrap = 0              # gof: parametric bootstrap replications (--bootstrap)
full_refit = false         # gof bootstrap: refit all parameters, not only the ground

[seeds]
master = 0                 #                                         (--seed)

[io]
# out = "path"             #                                         (--out)
"#;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub model: Option<MarkVariant>,
    pub edge_scope: Option<EdgeScope>,
    pub activity: Option<ActivityMode>,
    pub node_cutoff: Option<f64>,
    pub reps: Option<usize>,
    pub jobs: Option<usize>,
    pub bootstrap: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn parse_edge_scope(s: &str) -> Result<EdgeScope, String> {
    match s {
        "new-node" => Ok(EdgeScope::NewNode),
        "all-pairs" => Ok(EdgeScope::AllPairs),
        _ => Err(format!("unknown edge scope `{s}` (expected new-node or all-pairs)")),
    }
}

pub fn parse_activity(s: &str) -> Result<ActivityMode, String> {
    match s {
        "arrival" => Ok(ActivityMode::Arrival),
        "last-edge" => Ok(ActivityMode::LastEdge),
        _ => Err(format!("unknown activity mode `{s}` (expected arrival or last-edge)")),
    }
}

fn scope_str(s: EdgeScope) -> &'static str {
    match s {
        EdgeScope::NewNode => "new-node",
        EdgeScope::AllPairs => "all-pairs",
    }
}

fn activity_str(a: ActivityMode) -> &'static str {
    match a {
        ActivityMode::Arrival => "arrival",
        ActivityMode::LastEdge => "last-edge",
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = match e.span() {
                Some(span) => format!("line {}", text[..span.start].matches('\n').count() + 1),
                None => "document".into(),
            };
            CliError::config(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml(&read_file(path)?).map_err(|e| match e {
            CliError::Config { key, msg } => CliError::config(&format!("{} {key}", path.display()), msg),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seeds.master = s;
        }
        if let Some(m) = o.model {
            if m != self.mark.model {
                // coefficients belong to the old model
                self.mark.theta = None;
                self.mark.stats = None;
            }
            self.mark.model = m;
        }
        if o.edge_scope.is_some() {
            self.mark.edge_scope = o.edge_scope;
        }
        if let Some(a) = o.activity {
            self.mark.activity = a;
        }
        if o.node_cutoff.is_some() {
            self.mark.node_cutoff = o.node_cutoff;
        }
        if let Some(r) = o.reps {
            self.optimizer.reps = r;
        }
        if let Some(j) = o.jobs {
            self.optimizer.jobs = j;
        }
        if let Some(b) = o.bootstrap {
            self.optimizer.bootstrap = b;
        }
        if o.out.is_some() {
            self.io.out.clone_from(&o.out);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |key: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(CliError::config(key, format!("must be > 0, got {x}")))
            }
        };
        let nonneg = |key: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(CliError::config(key, format!("must be >= 0, got {x}")))
            }
        };
        positive("horizon", self.horizon)?;
        nonneg("ground.mu", self.ground.mu)?;
        nonneg("ground.K", self.ground.k)?;
        positive("ground.beta", self.ground.beta)?;
        nonneg("mark.tau", self.mark.tau)?;
        nonneg("mark.lambda_nodes", self.mark.lambda_nodes)?;
        nonneg("mark.nu", self.mark.nu)?;
        positive("mark.latent_scale", self.mark.latent_scale)?;
        if let Some(f) = self.mark.node_cutoff {
            if !(f > 0.0 && f <= 1.0) {
                return Err(CliError::config("mark.node_cutoff", format!("must lie in (0, 1], got {f}")));
            }
        }
        if self.optimizer.max_evals == 0 {
            return Err(CliError::config("optimizer.max_evals", "must be >= 1"));
        }
        if self.optimizer.jobs == 0 {
            return Err(CliError::config("optimizer.jobs", "must be >= 1"));
        }
        if self.optimizer.reps == 0 {
            return Err(CliError::config("optimizer.reps", "must be >= 1"));
        }
        if self.optimizer.bootstrap != 0 && self.optimizer.bootstrap < 99 {
            return Err(CliError::config("optimizer.bootstrap", "must be 0 (off) or >= 99"));
        }
        self.mark_spec()?;
        Ok(())
    }

    /// The mark model described by the `[mark]` section.
    pub fn mark_spec(&self) -> Result<MarkModelSpec, CliError> {
        let m = &self.mark;
        let mut spec = match m.model {
            MarkVariant::Ba => MarkModelSpec::ba(m.tau),
            MarkVariant::Cs => {
                let stats = m.stats.clone().unwrap_or_else(|| {
                    ["edges", "triangles", "2-star", "3-star"].iter().map(|s| s.to_string()).collect()
                });
                let theta = match &m.theta {
                    Some(t) => t.clone(),
                    None if m.stats.is_none() => vec![-6.0, 0.5, 0.3, -0.1],
                    None => return Err(CliError::config("mark.theta", "required when mark.stats is set")),
                };
                if theta.len() != stats.len() {
                    return Err(CliError::config(
                        "mark.theta",
                        format!("has {} entries but mark.stats has {}", theta.len(), stats.len()),
                    ));
                }
                MarkModelSpec::cs(stats, theta, m.tau, m.lambda_nodes).with_nu(m.nu)
            }
            MarkVariant::Sbm => {
                let probs = m.block_probs.clone().unwrap_or_else(|| vec![0.5, 0.5]);
                let matrix = m.block_matrix.clone().unwrap_or_else(|| vec![vec![0.3, 0.05], vec![0.05, 0.3]]);
                MarkModelSpec::sbm(probs, matrix, m.tau, m.lambda_nodes)
            }
            MarkVariant::Ls => {
                let theta = m.theta.clone().unwrap_or_else(|| vec![1.0, -2.0]);
                MarkModelSpec::ls(theta, m.latent_dim, m.tau, m.lambda_nodes).with_latent_scale(m.latent_scale)
            }
        };
        if let Some(scope) = m.edge_scope {
            spec = spec.with_scope(scope);
        }
        spec = spec.with_activity(m.activity);
        spec.validate().map_err(|e| CliError::config("mark", e.to_string()))?;
        Ok(spec)
    }

    /// Full model over `[0, horizon]`.
    pub fn model_spec(&self, horizon: f64) -> Result<ModelSpec, CliError> {
        let ground = GroundParams::new(self.ground.mu, self.ground.k, self.ground.beta);
        let mut spec = ModelSpec::new(ground, self.mark_spec()?, horizon);
        spec.node_rate_cutoff = self.mark.node_cutoff;
        spec.validate().map_err(|e| CliError::config("document", e.to_string()))?;
        Ok(spec)
    }

    pub fn fit_options(&self) -> FitOptions {
        let o = &self.optimizer;
        FitOptions {
            fixed: o.fixed.iter().cloned().collect(),
            max_evals: o.max_evals,
            restarts: o.restarts,
            seed: self.seeds.master,
            std_errors: match o.std_errors {
                StdErrorChoice::None => StdErrorMethod::None,
                StdErrorChoice::Hessian => StdErrorMethod::Hessian,
                StdErrorChoice::Replication => StdErrorMethod::Replication { reps: o.se_reps },
            },
            fallback_reps: o.se_reps,
            fit_nu: o.fit_nu,
            transform: o.transform,
            jobs: o.jobs,
            ..Default::default()
        }
    }
}

/// What a command produced: text for stdout and lines for stderr.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CmdOutput {
    pub stdout: String,
    pub stderr: Vec<String>,
}

impl CmdOutput {
    fn warn(&mut self, msg: impl std::fmt::Display) {
        self.stderr.push(format!("warning: {msg}"));
    }
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

/// Simulates from the configured model; the stream goes to `io.out` or stdout.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<CmdOutput, CliError> {
    let spec = cfg.model_spec(cfg.horizon)?;
    let r = simulate(&spec, cfg.seeds.master).map_err(CliError::model)?;
    let mut out = CmdOutput::default();
    let mut summary = String::new();
    kv(&mut summary, "seed", r.seed);
    kv(&mut summary, "events", r.events.len());
    kv(&mut summary, "nodes", r.network.node_count());
    kv(&mut summary, "edges", r.network.edge_count());
    kv(&mut summary, "branching_ratio", format_time(branching_ratio(&spec)));
    kv(&mut summary, "clamp_events", r.clamp_events);
    if r.events.is_empty() {
        out.warn("no events were generated");
    }
    let text = write_events(&EventStream::from_realization(&r));
    match &cfg.io.out {
        Some(path) => {
            write_file(path, &text)?;
            out.stdout = summary;
        }
        None => {
            out.stdout = text;
            out.stderr.extend(summary.lines().map(str::to_string));
        }
    }
    Ok(out)
}

/// Alternative names matching the usual table layout: the ground decay is
/// the overall decay and the mark decay is the edge decay.
fn label(name: &str) -> &str {
    match name {
        "beta" => "beta_overall",
        "tau" => "beta_edges",
        other => other,
    }
}

/// Renders a fit as `key = value` lines followed by a `[parameters]` table.
pub fn render_fit_report(fit: &FitResult, stream: &EventStream, cfg: &RunConfig, source: &Path) -> String {
    let mut out = String::from("# hawkesnet fit report\n");
    let spec = &fit.spec;
    kv(&mut out, "events_file", source.display());
    kv(&mut out, "model", spec.mark.variant.as_str());
    kv(&mut out, "n_events", fit.n_events);
    if let Ok(net) = stream.network() {
        kv(&mut out, "n_nodes", net.node_count());
        kv(&mut out, "n_edges", net.edge_count());
    }
    kv(&mut out, "horizon", format_time(spec.horizon));
    for key in ["time_offset", "time_scale"] {
        if let Some(v) = stream.meta.get(key) {
            kv(&mut out, key, v);
        }
    }
    kv(&mut out, "loglik", format_time(fit.loglik));
    kv(&mut out, "loglik_init", format_time(fit.loglik_init));
    kv(&mut out, "aic", format_time(fit.aic));
    kv(&mut out, "free_parameters", fit.free_count());
    kv(&mut out, "converged", fit.converged);
    kv(&mut out, "iterations", fit.iterations);
    kv(&mut out, "clamp_events", fit.clamp_events);
    kv(&mut out, "se_method", fit.se_method.map_or("none", |m| m.as_str()));
    kv(&mut out, "activity", activity_str(spec.mark.activity));
    kv(&mut out, "edge_scope", scope_str(spec.mark.edge_scope));
    kv(&mut out, "node_cutoff", spec.node_rate_cutoff.map_or("none".to_string(), format_time));
    kv(&mut out, "restarts", cfg.optimizer.restarts);
    kv(&mut out, "seed", cfg.seeds.master);
    for w in &fit.warnings {
        kv(&mut out, "warning", w);
    }
    kv(&mut out, "spec", spec.to_json());
    out.push_str("\n[parameters]\nname\tlabel\testimate\tstd_error\tfixed\n");
    for p in &fit.params {
        let se = p.std_error.map_or("NA".to_string(), format_time);
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", p.name, label(&p.name), format_time(p.value), se, p.fixed);
    }
    out
}

/// Fitted model stored in a report written by [`cmd_fit`].
pub fn read_fit_spec(report: &str) -> Result<ModelSpec, CliError> {
    let json = report
        .lines()
        .find_map(|l| l.strip_prefix("spec = "))
        .ok_or_else(|| CliError::Usage("fit report has no `spec = ` line".into()))?;
    serde_json::from_str(json).map_err(|e| CliError::Usage(format!("fit report spec: {e}")))
}

/// Fits the configured model family (config values are starting values).
pub fn cmd_fit(cfg: &RunConfig, events: &Path) -> Result<CmdOutput, CliError> {
    let stream = read_stream(events)?;
    let family = cfg.model_spec(stream.horizon)?;
    let fit = fit_mle(&stream.events, &stream.aux, &family, &cfg.fit_options()).map_err(CliError::model)?;
    let report = render_fit_report(&fit, &stream, cfg, events);
    let mut out = CmdOutput::default();
    for w in &fit.warnings {
        out.warn(w);
    }
    if !fit.converged {
        out.warn("optimizer did not converge");
    }
    match &cfg.io.out {
        Some(path) => {
            write_file(path, &report)?;
            out.stdout = format!("loglik = {}\naic = {}\n", format_time(fit.loglik), format_time(fit.aic));
        }
        None => out.stdout = report,
    }
    Ok(out)
}

/// Simulate-and-refit study; emits a tab-separated summary table.
pub fn cmd_replicate(cfg: &RunConfig) -> Result<CmdOutput, CliError> {
    let truth = cfg.model_spec(cfg.horizon)?;
    let mut fit = cfg.fit_options();
    fit.std_errors = StdErrorMethod::None;
    fit.jobs = 1;
    let opts = ReplicateOptions { fit, jobs: cfg.optimizer.jobs };
    let summary = replicate_experiment(&truth, cfg.optimizer.reps, cfg.seeds.master, &opts).map_err(CliError::model)?;
    let table = summary.to_table('\t');
    let mut out = CmdOutput::default();
    for w in &summary.warnings {
        out.warn(w);
    }
    match &cfg.io.out {
        Some(path) => write_file(path, &table)?,
        None => out.stdout = table,
    }
    Ok(out)
}

fn histogram_csv(h: &Histogram, name: &str) -> String {
    let mut out = format!("{name},count\n");
    for (v, c) in &h.0 {
        let _ = writeln!(out, "{v},{c}");
    }
    out
}

/// Summary statistics plus degree and ESP histograms. With `out` set, writes
/// `summary.csv`, `degree.csv` and `esp.csv` into that directory.
pub fn cmd_stats(events: &Path, out_dir: Option<&Path>) -> Result<CmdOutput, CliError> {
    let stream = read_stream(events)?;
    let net = stream.network().map_err(CliError::model)?;
    let summary = summary_statistics(&net).map_err(CliError::model)?;
    let mut csv = String::from("statistic,value\n");
    for (k, v) in summary.as_pairs() {
        let _ = writeln!(csv, "{k},{}", format_time(v));
    }
    if let Some(dir) = out_dir {
        let degree = degree_distribution(&net).map_err(CliError::model)?;
        let esp = esp_distribution(&net).map_err(CliError::model)?;
        write_file(&dir.join("summary.csv"), &csv)?;
        write_file(&dir.join("degree.csv"), &histogram_csv(&degree, "degree"))?;
        write_file(&dir.join("esp.csv"), &histogram_csv(&esp, "esp"))?;
    }
    Ok(CmdOutput { stdout: csv, stderr: Vec::new() })
}

/// Time-rescaling test of the fitted ground process. With `io.out` set,
/// writes `gof.txt` and `residuals.csv` into that directory.
pub fn cmd_gof(cfg: &RunConfig, events: &Path, fit_report: &Path) -> Result<CmdOutput, CliError> {
    let stream = read_stream(events)?;
    let fitted = read_fit_spec(&read_file(fit_report)?)?;
    let times = stream.times();
    let (series, ks) = time_change_test(&times, &fitted.ground).map_err(CliError::model)?;
    let mut report = String::from("# hawkesnet goodness of fit\n");
    kv(&mut report, "n", ks.n);
    kv(&mut report, "ks_statistic", format_time(ks.statistic));
    kv(&mut report, "p_value", format_time(ks.p_value));
    kv(&mut report, "ks_method", if ks.method == KsMethod::Exact { "exact" } else { "asymptotic" });
    if cfg.optimizer.bootstrap > 0 {
        let opts = BootstrapOptions {
            reps: cfg.optimizer.bootstrap,
            seed: cfg.seeds.master,
            full_refit: cfg.optimizer.full_refit,
            jobs: cfg.optimizer.jobs,
        };
        let b = bootstrap_pvalue(&times, &fitted, &opts).map_err(CliError::model)?;
        kv(&mut report, "bootstrap_reps", cfg.optimizer.bootstrap);
        kv(&mut report, "bootstrap_failures", b.failures);
        kv(&mut report, "bootstrap_p_value", format_time(b.p_value));
    }
    kv(&mut report, "note", MARK_CAVEAT);
    if let Some(dir) = &cfg.io.out {
        write_file(&dir.join("gof.txt"), &report)?;
        write_file(&dir.join("residuals.csv"), &series.to_csv())?;
    }
    Ok(CmdOutput { stdout: report, stderr: Vec::new() })
}

/// Path of the identifier dictionary written next to a converted stream.
pub fn dictionary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".dict.tsv");
    PathBuf::from(s)
}

/// Converts `t i j` contact rows into an event stream.
pub fn cmd_convert(input: &Path, out: Option<&Path>, rescale_to: Option<f64>) -> Result<CmdOutput, CliError> {
    let rows = parse_contacts(&read_file(input)?).map_err(|e| CliError::Io { path: input.into(), msg: e.to_string() })?;
    let conv = contacts_to_events(&rows, &ConvertOptions { rescale_to }).map_err(|e| CliError::Usage(e.to_string()))?;
    let net = conv.stream.network().map_err(CliError::model)?;
    let text = write_events(&conv.stream);
    let mut res = CmdOutput::default();
    let mut summary = String::new();
    kv(&mut summary, "events", conv.stream.events.len());
    kv(&mut summary, "nodes", net.node_count());
    kv(&mut summary, "edges", net.edge_count());
    kv(&mut summary, "repeats_dropped", conv.repeats_dropped);
    kv(&mut summary, "self_loops_skipped", conv.self_loops_skipped);
    if conv.self_loops_skipped > 0 {
        res.warn(format!("skipped {} self-loop rows", conv.self_loops_skipped));
    }
    match out {
        Some(path) => {
            write_file(path, &text)?;
            write_file(&dictionary_path(path), &conv.dictionary_tsv())?;
            res.stdout = summary;
        }
        None => {
            res.stdout = text;
            res.stderr.extend(summary.lines().map(str::to_string));
        }
    }
    Ok(res)
}
