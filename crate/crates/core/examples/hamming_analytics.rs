//! μ(d), prefix boundaries, spectral bounds and the path decomposition.
use colsub::graph::{hamming_embed, PrefixBoundaryScan};
use colsub::kappa::{hypercube_mu, hypercube_path_decomposition, kappa_lower_bounds};
use colsub::rational::format_rational;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for d in 1..=8 {
        println!("μ({d}) = {}", format_rational(&hypercube_mu(d)?));
    }
    let boundaries: Vec<u64> = PrefixBoundaryScan::new(3).map(|(_, b)| b).collect();
    println!("Q3 prefix boundaries: {boundaries:?}");
    for (q, d) in [(2, 3), (3, 2), (4, 2)] {
        let b = kappa_lower_bounds(q, d)?;
        println!("K_{q}^{d}: λ2 = {}, κ ≥ {}", format_rational(&b.lambda2), format_rational(&b.kappa_bound));
    }
    let p = hypercube_path_decomposition(4)?;
    println!("Q4 path decomposition: {} bags, width {}", p.bags.len(), p.width);
    let e = hamming_embed(4, 2)?;
    e.verify()?;
    println!("K_4^2 embeds into Q2↑4 via {:?}", e.map);
    Ok(())
}
