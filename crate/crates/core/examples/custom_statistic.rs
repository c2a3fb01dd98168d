//! Plug a user-defined change statistic into the change-statistic mark model.
//!
//! cargo run --release --example custom_statistic

use std::sync::Arc;

use hawkesnet::dynet::{ChangeStatistic, StatRegistry};
use hawkesnet::markmodel::{MarkModel, NodeAux};
use hawkesnet::{DynamicNetwork, MarkModelSpec, NodeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of isolated endpoints the new edge connects (0, 1 or 2).
struct IsolatesJoined;

impl ChangeStatistic for IsolatesJoined {
    fn name(&self) -> &str {
        "isolates-joined"
    }

    fn change(&self, net: &DynamicNetwork, u: NodeId, v: NodeId) -> f64 {
        (net.degree(u) == 0) as u8 as f64 + (net.degree(v) == 0) as u8 as f64
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut registry = StatRegistry::default();
    registry.register(Arc::new(IsolatesJoined));
    let spec = MarkModelSpec::cs(vec!["edges", "isolates-joined"], vec![-2.0, 1.5], 0.3, 1.0);
    let model = MarkModel::with_registry(spec, &registry)?;

    let mut net = DynamicNetwork::new();
    let mut aux = NodeAux::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for step in 1..=12 {
        let t = step as f64 * 0.5;
        let s = model.sample(&net, &aux, t, true, &mut rng)?;
        for rec in s.new_aux {
            aux.push(rec);
        }
        let lp = model.log_prob_mark(&net, &aux, t, &s.mark, true)?;
        net.apply_mark(t, &s.mark)?;
        println!("t = {t:>4}: +{} nodes, +{} edges, log q = {:.3}", s.mark.new_nodes.len(), s.mark.new_edges.len(), lp.log_prob);
    }
    println!("final network: {} nodes, {} edges", net.node_count(), net.edge_count());
    Ok(())
}

