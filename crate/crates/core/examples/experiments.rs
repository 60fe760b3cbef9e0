//! Run each experiment kind on the K3 fixture and print the CSV headers.
use std::sync::Arc;

use colsub::experiments::*;
use colsub::graph::PatternGraph;
use colsub::threshold::uniform_walk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = Fixture::new(Arc::new(uniform_walk(Arc::new(PatternGraph::complete(3)?))?));
    let mut janson = ExperimentConfig::new(ExperimentKind::Janson, "k3.g", UNIFORM_WALK, vec![1000], 50, 1);
    janson.pairs.push(PairSpec {
        base: SubgraphSpec::default(),
        universe: SubgraphSpec { vertices: vec![], edges: vec![(0, 1)] },
    });
    let configs = [
        ExperimentConfig::new(ExperimentKind::Concentration, "k3.g", UNIFORM_WALK, vec![128, 256], 50, 1),
        janson,
        ExperimentConfig::new(ExperimentKind::Goodness, "k3.g", UNIFORM_WALK, vec![500], 5, 1),
        ExperimentConfig::new(ExperimentKind::Scaling, "k3.g", UNIFORM_WALK, vec![256, 512, 1024, 2048], 9, 1),
    ];
    for cfg in &configs {
        let out = run_with(cfg, &fx)?;
        println!("== {:?}: {} checks, all passed: {}", cfg.kind, out.checks.len(), out.passed());
        for line in out.csv.lines().filter(|l| l.starts_with('#')) {
            println!("{line}");
        }
    }
    Ok(())
}
