//! A small simulate-and-refit study. Each replicate gets its own seed split
//! from the master seed, so the table does not depend on the thread count.
//!
//! cargo run --release --example replicate

use hawkesnet::estimate::{replicate_experiment, FitOptions, ReplicateOptions, StdErrorMethod};
use hawkesnet::{GroundParams, MarkModelSpec, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = ModelSpec::new(GroundParams::new(10.0, 0.5, 2.0), MarkModelSpec::ba(0.5), 30.0);
    let fit = FitOptions { restarts: 1, std_errors: StdErrorMethod::None, ..Default::default() };
    let opts = ReplicateOptions { fit, jobs: 2 };
    let summary = replicate_experiment(&truth, 10, 2024, &opts)?;
    print!("{}", summary.to_table('\t'));
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    let converged = summary.replicates.iter().filter(|r| r.outcome.as_ref().is_ok_and(|f| f.converged)).count();
    println!("\n{converged} of {} fits converged", summary.replicates.len());
    Ok(())
}
