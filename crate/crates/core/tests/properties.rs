//! Randomized invariants beyond the acceptance criteria.

mod common;

use std::sync::Arc;

use colsub::graph::{PatternGraph, Subgraph};
use colsub::kappa::{feasible_at, kappa_exact, validate_sequence, UnionSequence};
use colsub::randgraph::{expected_count, sample, ColoredHostGraph};
use colsub::rational::{int, ratio, Rational};
use colsub::solver::{count_extensions, goodness_report, join_solve, trie_reorder, trie_solve, trie_steps};
use colsub::threshold::{uniform_walk, ThresholdWeighting};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn walk(g: PatternGraph) -> Arc<ThresholdWeighting> {
    Arc::new(uniform_walk(Arc::new(g)).unwrap())
}

/// Validity straight from the definition: α ≤ 1, Δ(G[S]) ≥ 0 for every S,
/// Δ(G) = 0.
fn valid_oracle(w: &ThresholdWeighting) -> bool {
    let g = w.graph();
    if w.alphas().iter().any(|a| a > &Rational::one()) {
        return false;
    }
    let n = g.vertex_count();
    for s in 0u64..1 << n {
        let edges: Vec<usize> = (0..g.edge_count()).filter(|&e| g.edge_mask(e) & !s == 0).collect();
        let d = common::delta(w, s, &edges);
        if d < Rational::zero() || (s == (1 << n) - 1 && !d.is_zero()) {
            return false;
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn validate_matches_definition(seed in any::<u64>(), scale in 1i64..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Arc::new(common::random_graph(&mut rng, 5, 0.5));
        let alpha: Vec<Rational> = (0..g.vertex_count()).map(|_| ratio(rng.random_range(0..=scale), scale)).collect();
        let mut beta: Vec<Rational> = (0..g.edge_count()).map(|_| ratio(rng.random_range(0..=2 * scale), scale)).collect();
        // Make Δ(G) = 0 half of the time so the other conditions get exercised.
        if rng.random_bool(0.5) {
            let total: Rational = alpha.iter().sum::<Rational>() - beta.iter().sum::<Rational>();
            if let Some(b) = beta.first_mut() {
                if &*b + &total >= Rational::zero() {
                    *b += total;
                }
            }
        }
        let w = ThresholdWeighting::new(g, alpha, beta).unwrap();
        prop_assert_eq!(w.validate().is_ok(), valid_oracle(&w));
    }

    #[test]
    fn weighting_text_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, 7, 0.4);
        let w = common::random_weighting(&mut rng, g);
        let back = ThresholdWeighting::parse_text(w.graph_arc().clone(), &w.to_text()).unwrap();
        prop_assert_eq!(back.alphas(), w.alphas());
        prop_assert_eq!(back.betas(), w.betas());
    }

    #[test]
    fn kappa_is_below_every_sequence(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, 5, 0.5);
        let w = common::random_weighting(&mut rng, g.clone());
        let k = kappa_exact(&w).unwrap();
        prop_assert_eq!(validate_sequence(&k.witness, &w).unwrap(), k.value.clone());
        for _ in 0..5 {
            let s = common::random_sequence(&mut rng, &g);
            prop_assert!(validate_sequence(&s, &w).unwrap() >= k.value);
        }
        prop_assert!(feasible_at(&w, &k.value).unwrap());
        let below = &k.value - ratio(1, 1000);
        prop_assert!(!feasible_at(&w, &below).unwrap());
        if g.edge_count() <= 4 {
            prop_assert_eq!(common::kappa_exhaustive(&w), k.value.clone());
        }
    }

    #[test]
    fn sequence_json_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, 6, 0.5);
        let s = common::random_sequence(&mut rng, &g);
        prop_assert_eq!(UnionSequence::from_json(&g, &s.to_json()).unwrap(), s);
    }

    #[test]
    fn dump_round_trips(seed in any::<u64>(), n in 2u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, 5, 0.5);
        let w = Arc::new(common::random_weighting(&mut rng, g));
        let x = sample(w.clone(), n, seed).unwrap();
        let back = ColoredHostGraph::parse_dump(w, &x.to_dump()).unwrap();
        prop_assert_eq!(back.to_dump(), x.to_dump());
    }
}

#[test]
fn trie_reorder_preserves_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut cases = 0;
    let mut swaps = 0;
    while cases < 1000 {
        let g = common::random_graph(&mut rng, 4, 0.6);
        let w = Arc::new(common::random_weighting(&mut rng, g.clone()));
        let x = sample(w, rng.random_range(8..=60), rng.random()).unwrap();
        let s = common::random_sequence(&mut rng, &g);
        let (tries, overflow) = trie_steps(&x, &s, 2.0).unwrap();
        if overflow.is_some() {
            continue;
        }
        let t = tries.last().unwrap();
        let mut target = t.order().to_vec();
        target.shuffle(&mut rng);
        let Ok(r) = trie_reorder(&x, t, &target) else {
            continue;
        };
        let oracle = common::rows(&x, &Subgraph::full(&g));
        assert_eq!(t.rows(), oracle);
        assert_eq!(r.rows(), oracle);
        assert_eq!(r.order(), &target[..]);
        let sum: Rational = r.phi().iter().sum();
        assert_eq!(sum, x.weighting().delta(&Subgraph::full(&g)));
        swaps += (t.order() != &target[..]) as usize;
        cases += 1;
    }
    assert!(swaps > 500, "only {swaps} nontrivial reorders");
}

#[test]
fn join_peak_stays_near_n_to_the_kappa() {
    let mut within = 0;
    let mut total = 0;
    for g in [PatternGraph::complete(3).unwrap(), PatternGraph::path(3).unwrap(), PatternGraph::complete(4).unwrap()] {
        let w = walk(g);
        let k = kappa_exact(&w).unwrap();
        for n in [256u64, 1024] {
            let bound = (n as f64).powf(colsub::kappa::approx(&k.value)) * (n as f64).log2().powi(3);
            for seed in 0..20 {
                let x = sample(w.clone(), n, seed).unwrap();
                within += (join_solve(&x, &k.witness).unwrap().peak as f64 <= bound) as usize;
                total += 1;
            }
        }
    }
    assert!(within as f64 >= 0.95 * total as f64, "{within}/{total}");
}

#[test]
fn trie_overflow_is_rare_on_the_triangle() {
    let w = walk(PatternGraph::complete(3).unwrap());
    let s = kappa_exact(&w).unwrap().witness;
    let overflows = (0..50)
        .filter(|&seed| trie_solve(&sample(w.clone(), 1000, seed).unwrap(), &s, 2.0, false).unwrap().overflow.is_some())
        .count();
    assert!(overflows as f64 <= 0.05 * 50.0, "{overflows} overflows");
}

#[test]
fn triangle_decision_rate_is_nontrivial() {
    let w = walk(PatternGraph::complete(3).unwrap());
    let s = kappa_exact(&w).unwrap().witness;
    for n in [50u64, 100, 200] {
        let yes = (0..30)
            .filter(|&seed| join_solve(&sample(w.clone(), n, seed).unwrap(), &s).unwrap().decision)
            .count();
        assert!(yes > 0 && yes < 30, "n = {n}: {yes}/30");
    }
}

#[test]
fn edge_extension_counts_track_expectation() {
    for (g, n, e) in [(PatternGraph::complete(3).unwrap(), 10_000u64, 0usize), (PatternGraph::path(3).unwrap(), 10_000, 0)] {
        let w = walk(g);
        let gg = w.graph().clone();
        let u = Subgraph::single_edge(&gg, e);
        let expect = expected_count(&w, &u, n).unwrap().realized;
        let mean = (0..20)
            .map(|seed| count_extensions(&sample(w.clone(), n, seed).unwrap(), &[], &Subgraph::empty(&gg), &u).unwrap() as f64)
            .sum::<f64>()
            / 20.0;
        assert!((mean / expect - 1.0).abs() < 0.05, "mean {mean}, expected {expect}");
    }
}

#[test]
fn path_edge_mean_is_n_to_the_half() {
    let w = walk(PatternGraph::path(3).unwrap());
    let g = w.graph().clone();
    let h = Subgraph::single_edge(&g, 0);
    assert_eq!(w.delta(&h), ratio(1, 2));
    let mean = (0..100)
        .map(|seed| common::rows(&sample(w.clone(), 4096, seed).unwrap(), &h).len() as f64)
        .sum::<f64>()
        / 100.0;
    assert!((mean / 64.0 - 1.0).abs() < 0.1, "mean {mean}");
}

#[test]
fn empty_host_has_no_extensions() {
    let g = Arc::new(PatternGraph::complete(3).unwrap());
    let w = Arc::new(ThresholdWeighting::new(g.clone(), vec![int(1); 3], vec![int(1); 3]).unwrap());
    let x = ColoredHostGraph::from_parts(w, 20, 0, vec![20; 3], vec![vec![], vec![], vec![]]).unwrap();
    for r in goodness_report(&x, 3).unwrap() {
        if r.universe.edge_count() > 0 {
            assert_eq!(r.count, 0, "{} / {}", r.universe.describe(), r.base.describe());
        }
    }
}

#[test]
fn goodness_counts_match_reference_on_connected_universes() {
    let w = walk(PatternGraph::complete(3).unwrap());
    let x = sample(w, 300, 5).unwrap();
    let g = x.pattern().clone();
    for r in goodness_report(&x, 3).unwrap() {
        let ends = r.universe.edge_ids().fold(0u64, |m, e| m | g.edge_mask(e));
        if r.universe.edge_count() < 2 || ends != r.universe.vertices() {
            continue;
        }
        let rows = common::rows(&x, &r.universe);
        let vs = r.universe.vertex_list();
        let pos = |v: usize| vs.iter().position(|&w| w == v).unwrap();
        let base: Vec<usize> = r.base.vertex_list().into_iter().map(pos).collect();
        let mut groups = std::collections::BTreeMap::<Vec<u32>, std::collections::BTreeSet<u32>>::new();
        for row in &rows {
            groups.entry(base.iter().map(|&p| row[p]).collect()).or_default().insert(row[pos(r.vertex)]);
        }
        let expect = groups.values().map(|s| s.len() as u64).max().unwrap_or(0);
        assert_eq!(r.count, expect, "{} / {} / {}", r.universe.describe(), r.base.describe(), r.vertex);
    }
}
