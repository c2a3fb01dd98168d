//! Nelder-Mead simplex minimisation with random restarts.

use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged once every vertex lies within this sup-norm distance of the best.
    pub tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evals: 20_000, tol: 1e-8, initial_step: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn diameter(simplex: &[Vec<f64>], best: usize) -> f64 {
    simplex
        .iter()
        .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Minimises `f` from `x0`. Non-finite values are treated as `+inf`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let value = eval(x0, &mut evals);
        return Minimum { x: vec![], value, evals, converged: true };
    }
    let mut simplex = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut converged = false;
    while evals < opts.max_evals {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        if diameter(&simplex, best) < opts.tol {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let along = |coef: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[worst]).map(|(c, w)| c + coef * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[best] {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[worst] {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        // shrink towards the best vertex
        for &i in &order[1..] {
            let v: Vec<f64> = simplex[best].iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            values[i] = eval(&v, &mut evals);
            simplex[i] = v;
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty");
    Minimum { x: simplex[best].clone(), value: values[best], evals, converged }
}

/// Runs [`nelder_mead`] from `x0`, then `restarts` more times from Gaussian
/// perturbations (sd `spread`) of the best point found so far. Returns the
/// best minimum; `evals` counts all runs.
pub fn nelder_mead_restarts<F: FnMut(&[f64]) -> f64, R: Rng + ?Sized>(
    mut f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
    restarts: usize,
    spread: f64,
    rng: &mut R,
) -> Minimum {
    let mut best = nelder_mead(&mut f, x0, opts);
    let mut evals = best.evals;
    let normal = Normal::new(0.0, spread).expect("spread > 0");
    for _ in 0..restarts {
        let start: Vec<f64> = best.x.iter().map(|x| x + normal.sample(rng)).collect();
        let run = nelder_mead(&mut f, &start, opts);
        evals += run.evals;
        if run.value < best.value || (run.value == best.value && run.converged && !best.converged) {
            best = run;
        }
    }
    // polish: one more run from the winner so convergence is judged at the reported point
    let polish = nelder_mead(&mut f, &best.x.clone(), opts);
    evals += polish.evals;
    if polish.value <= best.value {
        best = polish;
    }
    best.evals = evals;
    best
}
