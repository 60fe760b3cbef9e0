//! Sort-merge join along the κ witness, checked against brute force, then
//! the peak list size at a larger n.
use std::sync::Arc;

use colsub::graph::PatternGraph;
use colsub::kappa::kappa_exact;
use colsub::randgraph::sample;
use colsub::solver::{brute_force, join_lists, join_solve, DEFAULT_ROW_CAP};
use colsub::threshold::uniform_walk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = Arc::new(uniform_walk(Arc::new(PatternGraph::complete(4)?))?);
    let seq = kappa_exact(&w)?.witness;
    for seed in 0..5 {
        let x = sample(w.clone(), 60, seed)?;
        let out = join_solve(&x, &seq)?;
        let lists = join_lists(&x, &seq, DEFAULT_ROW_CAP)?;
        let mut agree = true;
        for (l, s) in lists.iter().zip(seq.steps()) {
            agree &= &brute_force(&x, &s.graph)? == l;
        }
        println!("seed {seed}: decision {}, peak {}, counts {:?}, matches brute force: {agree}", out.decision, out.peak, out.counts);
    }
    let x = sample(w, 300, 0)?;
    println!("n = 300: peak {} (n^(5/3) = {:.0})", join_solve(&x, &seq)?.peak, 300f64.powf(5.0 / 3.0));
    Ok(())
}
