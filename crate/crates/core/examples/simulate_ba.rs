//! Simulate a preferential-attachment network whose growth events arrive as
//! a self-exciting process, then write the event stream.
//!
//! cargo run --release --example simulate_ba

use hawkesnet::ingest::{write_events, EventStream};
use hawkesnet::process::{branching_ratio, mean_intensity_estimate};
use hawkesnet::{simulate, GroundParams, MarkModelSpec, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::new(GroundParams::new(10.0, 0.5, 2.0), MarkModelSpec::ba(0.5), 100.0);
    let r = simulate(&spec, 42)?;

    println!("events          {}", r.events.len());
    println!("nodes / edges   {} / {}", r.network.node_count(), r.network.edge_count());
    println!("branching ratio {}", branching_ratio(&spec));
    println!("expected rate   {:.2} (observed {:.2})", mean_intensity_estimate(&spec)?, r.events.len() as f64 / spec.horizon);

    let max_degree = r.network.degrees().into_iter().max().unwrap_or(0);
    println!("largest degree  {max_degree}");

    let text = write_events(&EventStream::from_realization(&r));
    println!("\nfirst lines of the event stream:");
    for line in text.lines().filter(|l| !l.starts_with("#spec")).take(8) {
        println!("  {line}");
    }
    Ok(())
}
