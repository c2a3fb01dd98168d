//! Time-rescaling check of a fitted ground process, with the asymptotic KS
//! p-value and a parametric bootstrap p-value.
//!
//! cargo run --release --example goodness_of_fit

use hawkesnet::estimate::{fit_ground, FitOptions};
use hawkesnet::gof::{bootstrap_pvalue, time_change_test, BootstrapOptions, MARK_CAVEAT};
use hawkesnet::{simulate, GroundParams, MarkModelSpec, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = ModelSpec::new(GroundParams::new(2.0, 1.0, 2.0), MarkModelSpec::ba(0.5), 100.0);
    let times = simulate(&truth, 11)?.times();

    let fit = fit_ground(&times, truth.horizon, truth.ground, &FitOptions::default())?;
    let g = fit.params;
    println!("fitted mu {:.3}, K {:.3}, beta {:.3}", g.mu, g.k, g.beta);

    let (series, ks) = time_change_test(&times, &g)?;
    println!("self-exciting fit: D = {:.4}, p = {:.3} ({} residuals)", ks.statistic, ks.p_value, series.transformed.len());

    let poisson = GroundParams::new(times.len() as f64 / truth.horizon, 0.0, 1.0);
    let (_, ks0) = time_change_test(&times, &poisson)?;
    println!("Poisson fit:       D = {:.4}, p = {:.2e}", ks0.statistic, ks0.p_value);

    let mut fitted = truth.clone();
    fitted.ground = g;
    let boot = bootstrap_pvalue(&times, &fitted, &BootstrapOptions { reps: 99, seed: 5, ..Default::default() })?;
    println!("bootstrap p = {:.3} over {} replicates", boot.p_value, boot.d_simulated.len());
    println!("\n{MARK_CAVEAT}");
    Ok(())
}
