//! Stability diagnostics: the closed-form branching ratio of the ground
//! kernel and Monte Carlo estimates for kernels that depend on the network.
//!
//! cargo run --release --example stability

use hawkesnet::process::{estimate_branching_ratio_mc, DiagnosticKernel};
use hawkesnet::{GroundParams, MarkModelSpec, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mark = MarkModelSpec::cs(vec!["edges", "triangles", "2-star", "3-star"], vec![-6.0, 0.5, 0.3, -0.1], 0.5, 1.0);
    let spec = ModelSpec::new(GroundParams::new(10.0, 0.5, 2.0), mark, 5.0);

    let kernels = [
        ("exponential", DiagnosticKernel::Exponential { k: 0.5, beta: 2.0 }),
        ("triangle feedback", DiagnosticKernel::TriangleFeedback { alpha: 0.5, gamma: 0.3, beta: 2.0 }),
        ("degree power law", DiagnosticKernel::DegreePowerLaw { alpha: 1.0, c: 0.5, p: 2.5 }),
    ];
    println!("{:<20}{:>10}{:>10}{:>12}", "kernel", "mean", "se", "worst run");
    for (name, kernel) in kernels {
        let est = estimate_branching_ratio_mc(kernel, &spec, 50.0, 20, 1)?;
        let flag = if est.sup_violation { "  (>= 1 seen)" } else { "" };
        println!("{name:<20}{:>10.3}{:>10.3}{:>12.3}{flag}", est.mean, est.std_error, est.max_history);
    }

    // power-law tails with p <= 1 never integrate
    let heavy = DiagnosticKernel::DegreePowerLaw { alpha: 1.0, c: 0.5, p: 0.9 };
    println!("\np = 0.9: {}", estimate_branching_ratio_mc(heavy, &spec, 50.0, 5, 1).unwrap_err());
    Ok(())
}
