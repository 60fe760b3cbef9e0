//! The clique construction against the bound max_i i(k−i)/(k−1) + 1.
use std::sync::Arc;

use colsub::graph::PatternGraph;
use colsub::kappa::{clique_bound, clique_sequence, kappa_exact};
use colsub::rational::format_rational;
use colsub::threshold::random_walk_weighting;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 3..=6 {
        let g = Arc::new(PatternGraph::complete(k)?);
        let w = random_walk_weighting(g, &mut rng, 6, true)?;
        let (seq, max) = clique_sequence(&w)?;
        let exact = if k <= 5 { format_rational(&kappa_exact(&w)?.value) } else { "-".into() };
        println!(
            "K{k}: sequence max Δ {} ≤ bound {}, exact κ {exact}, {} steps",
            format_rational(&max),
            format_rational(&clique_bound(k)),
            seq.len()
        );
    }
    Ok(())
}
