//! Fit the change-statistic model by maximum likelihood to one simulated
//! realisation and compare with the truth.
//!
//! cargo run --release --example fit_cs

use hawkesnet::estimate::{fit_mle, FitOptions};
use hawkesnet::{simulate, GroundParams, MarkModelSpec, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mark = MarkModelSpec::cs(vec!["edges", "triangles", "2-star", "3-star"], vec![-6.0, 0.5, 0.3, -0.1], 0.5, 1.0);
    let truth = ModelSpec::new(GroundParams::new(10.0, 0.5, 2.0), mark, 10.0);
    let r = simulate(&truth, 7)?;
    println!("{} events, {} nodes, {} edges", r.events.len(), r.network.node_count(), r.network.edge_count());

    // truth doubles as the starting point; restarts guard against local optima
    let opts = FitOptions { restarts: 2, ..Default::default() };
    let fit = fit_mle(&r.events, &r.aux, &truth, &opts)?;

    println!("log-likelihood {:.3} (at start {:.3}), AIC {:.1}", fit.loglik, fit.loglik_init, fit.aic);
    println!("converged {} after {} evaluations\n", fit.converged, fit.iterations);
    let truth_of = |name: &str| hawkesnet::estimate::parameters(&truth).into_iter().find(|p| p.name == name).map(|p| p.value);
    println!("{:<14}{:>10}{:>10}{:>10}", "parameter", "truth", "estimate", "se");
    for p in fit.params.iter().filter(|p| !p.fixed) {
        let se = p.std_error.map_or("-".into(), |s| format!("{s:.3}"));
        println!("{:<14}{:>10.3}{:>10.3}{:>10}", p.name, truth_of(&p.name).unwrap_or(f64::NAN), p.value, se);
    }
    Ok(())
}
