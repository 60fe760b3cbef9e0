//! Trie build, reorder and merge, with the overflow channel.
use std::sync::Arc;

use colsub::graph::{PatternGraph, Subgraph};
use colsub::kappa::kappa_exact;
use colsub::randgraph::sample;
use colsub::rational::format_rational;
use colsub::solver::{brute_force, join_solve, trie_build, trie_reorder, trie_solve};
use colsub::threshold::uniform_walk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = Arc::new(uniform_walk(Arc::new(PatternGraph::complete(3)?))?);
    let x = sample(w.clone(), 500, 1)?;
    let g = w.graph();

    let t = trie_build(&x, 0, [0, 1], 2.0)?;
    let phi: Vec<String> = t.phi().iter().map(format_rational).collect();
    println!("edge trie: {} nodes, φ = {phi:?}, capacities {:?}", t.size(), t.capacities());
    let swapped = trie_reorder(&x, &t, &[1, 0])?;
    let brute = brute_force(&x, &Subgraph::single_edge(g, 0))?;
    println!("reorder keeps {} rows (brute force {})", swapped.rows().len(), brute.len());

    let seq = kappa_exact(&w)?.witness;
    for seed in 0..5 {
        let x = sample(w.clone(), 1000, seed)?;
        let r = trie_solve(&x, &seq, 2.0, true)?;
        println!(
            "seed {seed}: trie {} (overflow: {}), join {}, sizes {:?}",
            r.decision,
            r.overflow.is_some(),
            join_solve(&x, &seq)?.decision,
            r.sizes
        );
    }
    Ok(())
}
