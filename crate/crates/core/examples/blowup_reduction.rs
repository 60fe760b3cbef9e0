//! Lift a sequence from G to the blowup G↑q and project a weighting back.
use std::sync::Arc;

use colsub::graph::{blowup, PatternGraph};
use colsub::kappa::{blowup_sequence_checked, kappa_exact};
use colsub::rational::format_rational;
use colsub::threshold::{blowup_project, uniform_walk};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = PatternGraph::path(3)?;
    let map = blowup(&g, 2)?;
    println!("P3↑2 has {} vertices, {} edges", map.result().vertex_count(), map.result().edge_count());

    let big = Arc::new(map.result().clone());
    let w_big = uniform_walk(big)?;
    let w_small = blowup_project(&w_big, &map)?;
    print!("projected weighting:\n{}", w_small.to_text());

    let base = kappa_exact(&w_small)?;
    let (lifted, max, bound) = blowup_sequence_checked(&base.witness, &map, &w_big)?;
    println!(
        "κ on P3 = {}, lifted sequence: {} steps, max Δ {} (bound {})",
        format_rational(&base.value),
        lifted.len(),
        format_rational(&max),
        format_rational(&bound)
    );
    Ok(())
}
