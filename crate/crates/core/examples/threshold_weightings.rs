//! Build weightings, validate them, and inspect Δ*, Γ and the flow decomposition.
use std::sync::Arc;

use colsub::graph::{PatternGraph, Subgraph};
use colsub::rational::{format_rational, int, ratio};
use colsub::threshold::{delta_star, gamma, markov_decompose, uniform_walk, ThresholdWeighting};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k3 = Arc::new(PatternGraph::complete(3)?);
    let walk = uniform_walk(k3.clone())?;
    print!("uniform walk on K3:\n{}", walk.to_text());

    let path = Arc::new(PatternGraph::path(3)?);
    let w = ThresholdWeighting::new(path.clone(), vec![int(1), int(1), int(1)], vec![int(1), int(2)])?;
    w.validate()?;
    let full = Subgraph::full(&path);
    let empty = Subgraph::empty(&path);
    println!("Δ(P3) = {}", format_rational(&w.delta(&full)));
    println!("Δ*_P3(∅) = {}", format_rational(&delta_star(&w, &full, &empty)?));
    println!("Γ_P3(∅) = {}", gamma(&w, &full, &empty)?.describe());

    let bad = ThresholdWeighting::new(path, vec![int(1); 3], vec![ratio(3, 2), ratio(1, 2)])?;
    println!("invalid weighting rejected: {}", bad.validate().unwrap_err());

    let m = markov_decompose(&walk)?;
    print!("flow decomposition of the walk:\n{}", m.to_text());
    Ok(())
}
