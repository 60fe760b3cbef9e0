//! The hypercube recursion and its 2μ(d) guarantee.
use std::sync::Arc;

use colsub::graph::hypercube;
use colsub::kappa::{hypercube_mu, hypercube_sequence, kappa_exact};
use colsub::rational::{format_rational, int};
use colsub::threshold::{random_walk_weighting, ThresholdWeighting};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 2..=4u32 {
        let g = Arc::new(hypercube(d as usize)?);
        let mu = hypercube_mu(d)?;
        let half = ThresholdWeighting::with_unit_alpha(g.clone(), vec![colsub::rational::ratio(2, d as i64); g.edge_count()])?;
        let random = random_walk_weighting(g.clone(), &mut rng, 4, true)?;
        for (label, w) in [("regular", half), ("random", random)] {
            let (_, max) = hypercube_sequence(&w)?;
            let exact = if g.edge_count() <= 12 { format_rational(&kappa_exact(&w)?.value) } else { "-".into() };
            println!(
                "Q{d} {label}: max Δ {} ≤ 2μ = {}, exact κ {exact}",
                format_rational(&max),
                format_rational(&(mu.clone() * int(2)))
            );
        }
    }
    Ok(())
}
