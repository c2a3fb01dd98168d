//! Compare networks grown by the preferential-attachment and change-statistic
//! mark models: size-normalised summaries and degree / ESP histograms.
//!
//! cargo run --release --example network_stats

use hawkesnet::dynet::{degree_distribution, esp_distribution, summary_statistics};
use hawkesnet::{simulate, GroundParams, MarkModelSpec, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ground = GroundParams::new(10.0, 0.5, 2.0);
    let ba = ModelSpec::new(ground, MarkModelSpec::ba(0.5), 100.0);
    let cs = ModelSpec::new(
        ground,
        MarkModelSpec::cs(vec!["edges", "triangles", "2-star", "3-star"], vec![-6.0, 0.5, 0.3, -0.1], 0.5, 1.0),
        10.0,
    );
    let nets = [simulate(&ba, 3)?.network, simulate(&cs, 3)?.network];

    let summaries = [summary_statistics(&nets[0])?, summary_statistics(&nets[1])?];
    println!("{:<24}{:>10}{:>10}", "statistic", "BA", "CS");
    for ((name, a), (_, b)) in summaries[0].as_pairs().into_iter().zip(summaries[1].as_pairs()) {
        println!("{name:<24}{a:>10.3}{b:>10.3}");
    }

    for (label, net) in ["BA", "CS"].iter().zip(&nets) {
        let deg = degree_distribution(net)?;
        let esp = esp_distribution(net)?;
        println!("\n{label}: degree 95th percentile {}, share of degree above it {:.3}", deg.quantile(0.95), deg.tail_share(0.95));
        let head: Vec<String> = esp.normalized().iter().take(5).map(|(k, p)| format!("{k}:{p:.2}")).collect();
        println!("{label}: ESP distribution (first values) {}", head.join(" "));
    }
    Ok(())
}
