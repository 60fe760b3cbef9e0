//! Extension counts against n^{Δ*_U(A∪v) − Δ*_U(A)}.
use std::sync::Arc;

use colsub::graph::PatternGraph;
use colsub::randgraph::sample;
use colsub::rational::format_rational;
use colsub::solver::goodness_report;
use colsub::threshold::uniform_walk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = Arc::new(uniform_walk(Arc::new(PatternGraph::complete(3)?))?);
    let n = 2000;
    let x = sample(w, n, 11)?;
    let rows = goodness_report(&x, 3)?;
    let mut worst = rows.iter().collect::<Vec<_>>();
    worst.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    for r in worst.iter().take(8) {
        println!(
            "U={:<16} A={:<16} v={} count {:>5} exponent {:>4} ratio {:.3}",
            r.universe.describe(),
            r.base.describe(),
            r.vertex,
            r.count,
            format_rational(&r.exponent),
            r.ratio
        );
    }
    println!("{} triples, max ratio {:.3}, (log2 n)^3 = {:.1}", rows.len(), worst[0].ratio, (n as f64).log2().powi(3));
    Ok(())
}
