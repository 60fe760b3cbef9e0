//! Exact κ_Δ(G) with a witness sequence, on the three smallest fixtures.
use std::sync::Arc;

use colsub::graph::PatternGraph;
use colsub::kappa::{kappa_exact, validate_sequence};
use colsub::rational::format_rational;
use colsub::threshold::uniform_walk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, g) in [
        ("edge", PatternGraph::complete(2)?),
        ("P3", PatternGraph::path(3)?),
        ("K3", PatternGraph::complete(3)?),
        ("K4", PatternGraph::complete(4)?),
    ] {
        let w = uniform_walk(Arc::new(g))?;
        let r = kappa_exact(&w)?;
        let checked = validate_sequence(&r.witness, &w)?;
        println!("{name}: κ = {} (witness max Δ {}, {} steps)", format_rational(&r.value), format_rational(&checked), r.witness.len());
        println!("  {}", r.witness.to_json());
    }
    Ok(())
}
