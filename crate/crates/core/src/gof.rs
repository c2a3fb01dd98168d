//! Goodness of fit through the random time change.
//!
//! Under a correctly specified ground intensity the compensator values
//! `Lambda(t_i)` form a unit-rate Poisson process, so their gaps are
//! Exponential(1). The gaps are compared with Exp(1) by a one-sample
//! Kolmogorov-Smirnov test, optionally calibrated by a parametric bootstrap.

use rayon::prelude::*;
use thiserror::Error;

use crate::estimate::{fit_ground, fit_mle, EstimateError, FitOptions, StdErrorMethod};
use crate::kernel::{GroundParams, KernelError, MIN_SEPARATION};
use crate::markmodel::MarkModelSpec;
use crate::process::{replication_seed, simulate, ModelSpec, ProcessError};

/// Printed with every goodness-of-fit report.
pub const MARK_CAVEAT: &str = "The time change integrates the marks out, so this test checks the event \
times only and carries no information about the mark-model parameters.";

/// Minimum number of samples accepted by [`ks_test`].
pub const MIN_KS_SAMPLES: usize = 8;

/// Below this sample size [`ks_test`] uses the exact distribution.
pub const EXACT_KS_BELOW: usize = 35;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GofError {
    #[error("need at least {MIN_KS_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("{failed} of {reps} bootstrap replications failed")]
    TooManyFailures { failed: usize, reps: usize },
    #[error("{0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

/// Compensator values at the event times.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub transformed: Vec<f64>,
}

impl ResidualSeries {
    /// Gaps `Lambda(t_1) - 0, Lambda(t_2) - Lambda(t_1), ...`.
    pub fn inter_arrivals(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.transformed
            .iter()
            .map(|&x| {
                let d = x - prev;
                prev = x;
                d
            })
            .collect()
    }

    /// Two-column CSV `index,transformed_time`, 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,transformed_time\n");
        for (i, x) in self.transformed.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, crate::ingest::format_time(*x)));
        }
        out
    }
}

/// `Lambda(t_i) = mu t_i + (K/beta) (i - A_i)`, the compensator of the
/// ground intensity at each event time.
pub fn rescale(times: &[f64], g: &GroundParams) -> Result<ResidualSeries, GofError> {
    g.validate()?;
    let mut a = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            if !(t - times[i - 1] >= MIN_SEPARATION) {
                return Err(KernelError::UnsortedEvents { index: i }.into());
            }
            a = (-g.beta * (t - times[i - 1])).exp() * (1.0 + a);
        }
        out.push(g.mu * t + g.k / g.beta * (i as f64 - a));
    }
    Ok(ResidualSeries { transformed: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsMethod {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: KsMethod,
}

/// Kolmogorov-Smirnov distance between the samples and Exponential(`rate`).
pub fn ks_statistic(samples: &[f64], rate: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() };
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// One-sample KS test against Exponential(`rate`): exact p-value for
/// `n < 35`, Kolmogorov limit with a small-sample correction otherwise.
pub fn ks_test(samples: &[f64], rate: f64) -> Result<KsResult, GofError> {
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(GofError::TooFewSamples(n));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(GofError::InvalidOptions(format!("rate must be > 0, got {rate}")));
    }
    let d = ks_statistic(samples, rate);
    let (p_value, method) = if n < EXACT_KS_BELOW {
        (ks_exact_pvalue(n, d), KsMethod::Exact)
    } else {
        (ks_asymptotic_pvalue(n, d), KsMethod::Asymptotic)
    };
    Ok(KsResult { statistic: d, p_value, n, method })
}

/// `P(D_n >= d)` from the limiting distribution with Stephens' correction.
pub fn ks_asymptotic_pvalue(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// `Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2)`.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Exact `P(D_n >= d)` by the matrix method of Marsaglia, Tsang and Wang.
pub fn ks_exact_pvalue(n: usize, d: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    if d >= 1.0 {
        return 0.0;
    }
    let nf = n as f64;
    let k = (nf * d) as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nf * d;
    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            hm[i * m + j] = if i + 1 >= j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    hm[i * m + j] /= g as f64;
                }
            }
        }
    }
    let (q, mut eq) = matrix_power(&hm, 0, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s *= i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            eq -= 140;
        }
    }
    let cdf = s * 10f64.powi(eq);
    (1.0 - cdf).clamp(0.0, 1.0)
}

fn matrix_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let x = a[i * m + l];
            if x == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += x * b[l * m + j];
            }
        }
    }
    c
}

/// `a^n` with a base-10 exponent carried separately to avoid overflow.
fn matrix_power(a: &[f64], ea: i32, m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), ea);
    }
    let (half, eh) = matrix_power(a, ea, m, n / 2);
    let mut v = matrix_mul(&half, &half, m);
    let mut ev = 2 * eh;
    if n % 2 == 1 {
        v = matrix_mul(a, &v, m);
        ev += ea;
    }
    if v[(m / 2) * m + m / 2] > 1e140 {
        v.iter_mut().for_each(|x| *x *= 1e-140);
        ev += 140;
    }
    (v, ev)
}

/// Rescales `times` under `g` and tests the gaps against Exp(1).
pub fn time_change_test(times: &[f64], g: &GroundParams) -> Result<(ResidualSeries, KsResult), GofError> {
    let series = rescale(times, g)?;
    let ks = ks_test(&series.inter_arrivals(), 1.0)?;
    Ok((series, ks))
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    pub reps: usize,
    pub seed: u64,
    /// Refit every parameter on each replicate instead of only the ground block.
    pub full_refit: bool,
    pub jobs: usize,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { reps: 99, seed: 0, full_refit: false, jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub p_value: f64,
    pub d_observed: f64,
    pub d_simulated: Vec<f64>,
    pub failures: usize,
}

/// Bootstrap p-value `(1 + #{D_sim >= D_obs}) / (B + 1)` over the `B`
/// successful replicates simulated from `fitted`.
pub fn bootstrap_pvalue(times: &[f64], fitted: &ModelSpec, opts: &BootstrapOptions) -> Result<BootstrapResult, GofError> {
    if opts.reps < 99 {
        return Err(GofError::InvalidOptions(format!("bootstrap needs at least 99 replications, got {}", opts.reps)));
    }
    let d_observed = time_change_test(times, &fitted.ground)?.1.statistic;
    let one = |i: u64| -> Result<f64, String> {
        let seed = replication_seed(opts.seed, i);
        let (times, ground) = if opts.full_refit {
            let r = simulate(fitted, seed).map_err(|e| e.to_string())?;
            let fo = FitOptions { restarts: 1, seed, std_errors: StdErrorMethod::None, ..Default::default() };
            let fit = fit_mle(&r.events, &r.aux, fitted, &fo).map_err(|e| e.to_string())?;
            (r.times(), fit.spec.ground)
        } else {
            // the ground process does not depend on the marks, so simulating it alone is exact
            let spec = ModelSpec::new(fitted.ground, MarkModelSpec::trivial(), fitted.horizon);
            let times = simulate(&spec, seed).map_err(|e| e.to_string())?.times();
            let fo = FitOptions { restarts: 1, seed, ..Default::default() };
            let fit = fit_ground(&times, fitted.horizon, fitted.ground, &fo).map_err(|e| e.to_string())?;
            (times, fit.params)
        };
        time_change_test(&times, &ground).map(|(_, ks)| ks.statistic).map_err(|e| e.to_string())
    };
    let outcomes: Vec<Result<f64, String>> = if opts.jobs <= 1 {
        (0..opts.reps as u64).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| GofError::InvalidOptions(e.to_string()))?;
        pool.install(|| (0..opts.reps as u64).into_par_iter().map(one).collect())
    };
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    if failures * 5 > opts.reps {
        return Err(GofError::TooManyFailures { failed: failures, reps: opts.reps });
    }
    let d_simulated: Vec<f64> = outcomes.into_iter().filter_map(Result::ok).collect();
    Ok(BootstrapResult {
        p_value: bootstrap_p(d_observed, &d_simulated),
        d_observed,
        d_simulated,
        failures,
    })
}

/// `(1 + #{d >= observed}) / (len + 1)`.
pub fn bootstrap_p(observed: f64, simulated: &[f64]) -> f64 {
    let exceed = simulated.iter().filter(|&&d| d >= observed).count();
    (1 + exceed) as f64 / (simulated.len() + 1) as f64
}
