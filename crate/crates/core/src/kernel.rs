//! Exponential excitation kernel of the ground process.
//!
//! The ground intensity is `mu + K * sum_{t_i < t} exp(-beta (t - t_i))`,
//! which integrates in closed form and admits an O(n) recursion for the
//! per-event excitation sums.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Event times closer than this are treated as simultaneous.
pub const MIN_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid ground parameters: {0}")]
    InvalidParams(String),
    #[error("event at {time} lies after the horizon {horizon}")]
    EventAfterHorizon { time: f64, horizon: f64 },
    #[error("event times are not strictly increasing at index {index}")]
    UnsortedEvents { index: usize },
}

/// Background rate, excitation weight and decay of the ground process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundParams {
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: f64,
}

impl GroundParams {
    pub fn new(mu: f64, k: f64, beta: f64) -> Self {
        GroundParams { mu, k, beta }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.mu) {
            return Err(KernelError::InvalidParams(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !ok(self.k) {
            return Err(KernelError::InvalidParams(format!("K must be >= 0, got {}", self.k)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(KernelError::InvalidParams(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    /// Expected number of direct offspring per event, `K / beta`.
    pub fn branching_ratio(&self) -> f64 {
        self.k / self.beta
    }

    pub fn is_stable(&self) -> bool {
        self.branching_ratio() < 1.0
    }
}

/// `mu + K * sum_{t_i < t} exp(-beta (t - t_i))`.
pub fn ground_intensity(t: f64, event_times: &[f64], p: &GroundParams) -> f64 {
    let excitation: f64 = event_times
        .iter()
        .take_while(|&&ti| ti < t)
        .map(|&ti| (-p.beta * (t - ti)).exp())
        .sum();
    p.mu + p.k * excitation
}

/// Integrated ground intensity over `[0, horizon]`:
/// `mu T + (K / beta) sum_i (1 - exp(-beta (T - t_i)))`.
pub fn compensator(horizon: f64, event_times: &[f64], p: &GroundParams) -> Result<f64, KernelError> {
    let mut acc = 0.0;
    for &ti in event_times {
        if ti > horizon {
            return Err(KernelError::EventAfterHorizon { time: ti, horizon });
        }
        acc += -(-p.beta * (horizon - ti)).exp_m1();
    }
    Ok(p.mu * horizon + p.k / p.beta * acc)
}

/// `A_i = sum_{j < i} exp(-beta (t_i - t_j))` via
/// `A_i = exp(-beta (t_i - t_{i-1})) (1 + A_{i-1})`.
pub fn excitation_sum_recursive(event_times: &[f64], beta: f64) -> Result<Vec<f64>, KernelError> {
    let mut out = Vec::with_capacity(event_times.len());
    let mut prev: Option<(f64, f64)> = None;
    for (i, &t) in event_times.iter().enumerate() {
        let a = match prev {
            None => 0.0,
            Some((tp, ap)) => {
                if !(t - tp >= MIN_SEPARATION) {
                    return Err(KernelError::UnsortedEvents { index: i });
                }
                (-beta * (t - tp)).exp() * (1.0 + ap)
            }
        };
        out.push(a);
        prev = Some((t, a));
    }
    Ok(out)
}

/// Running excitation sum for sequential use (simulation). Holds
/// `sum_i exp(-beta (now - t_i))` over events so far.
#[derive(Debug, Clone, Copy)]
pub struct ExcitationState {
    beta: f64,
    now: f64,
    sum: f64,
}

impl ExcitationState {
    pub fn new(beta: f64) -> Self {
        ExcitationState { beta, now: 0.0, sum: 0.0 }
    }

    /// Excitation at `t >= now` without moving the state.
    pub fn peek(&self, t: f64) -> f64 {
        self.sum * (-self.beta * (t - self.now)).exp()
    }

    pub fn advance(&mut self, t: f64) {
        self.sum = self.peek(t);
        self.now = t;
    }

    /// Adds an event at the current time.
    pub fn add_event(&mut self) {
        self.sum += 1.0;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}
