//! Sample X_Δ(n), compare counts with expectations, and round-trip the dump.
use std::sync::Arc;

use colsub::graph::{all_subgraphs, PatternGraph};
use colsub::randgraph::{expected_count, sample, ColoredHostGraph};
use colsub::solver::count_copies;
use colsub::threshold::uniform_walk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = Arc::new(uniform_walk(Arc::new(PatternGraph::complete(3)?))?);
    let x = sample(w.clone(), 1000, 42)?;
    println!("blocks {:?}, {} host edges", x.block_sizes(), x.edge_total());
    for h in all_subgraphs(w.graph(), 3).iter().filter(|h| h.edge_count() > 0) {
        let e = expected_count(&w, h, 1000)?;
        println!("{:<16} count {:>8}  expected {:>10.2}", h.describe(), count_copies(&x, h)?, e.realized);
    }
    let dump = x.to_dump();
    let back = ColoredHostGraph::parse_dump(w, &dump)?;
    assert_eq!(back.to_dump(), dump);
    println!("dump round-trips ({} bytes)", dump.len());
    Ok(())
}
