//! Independent reference implementations and generators shared by the
//! integration suites. Nothing here calls the library routine it checks.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use colsub::graph::{PatternGraph, Subgraph};
use colsub::kappa::{SequenceBuilder, UnionSequence};
use colsub::randgraph::ColoredHostGraph;
use colsub::rational::Rational;
use colsub::threshold::{random_walk_weighting, uniform_walk, ThresholdWeighting};
use num_traits::Zero;
use rand::Rng;

/// Print one verdict line and fail the test on a miss.
pub fn verdict(id: usize, name: &str, passed: bool, detail: impl std::fmt::Display) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2} {name}: {detail}");
    assert!(passed, "criterion {id} ({name}) failed: {detail}");
}

pub fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}

/// Random graph on `2..=max_v` vertices without isolated vertices.
pub fn random_graph(rng: &mut impl Rng, max_v: usize, density: f64) -> PatternGraph {
    let v = rng.random_range(2..=max_v);
    let mut edges = BTreeSet::new();
    for a in 0..v {
        for b in a + 1..v {
            if rng.random_bool(density) {
                edges.insert((a, b));
            }
        }
    }
    for a in 0..v {
        if !edges.iter().any(|&(x, y)| x == a || y == a) {
            let mut b = rng.random_range(0..v - 1);
            if b >= a {
                b += 1;
            }
            edges.insert((a.min(b), a.max(b)));
        }
    }
    PatternGraph::build(v, &edges.into_iter().collect::<Vec<_>>()).unwrap()
}

/// A mix of the uniform walk and random flow weightings.
pub fn random_weighting(rng: &mut impl Rng, g: PatternGraph) -> ThresholdWeighting {
    let g = Arc::new(g);
    match rng.random_range(0..4) {
        0 => uniform_walk(g).unwrap(),
        1 => random_walk_weighting(g, rng, 5, true).unwrap(),
        _ => random_walk_weighting(g, rng, 6, false).unwrap(),
    }
}

/// `Δ` straight from the definition.
pub fn delta(w: &ThresholdWeighting, vertices: u64, edges: &[usize]) -> Rational {
    let a: Rational = bits(vertices).map(|u| w.alpha(u).clone()).sum();
    let b: Rational = edges.iter().map(|&e| w.beta(e).clone()).sum();
    a - b
}

pub fn delta_of(w: &ThresholdWeighting, h: &Subgraph) -> Rational {
    delta(w, h.vertices(), &h.edge_ids().collect::<Vec<_>>())
}

/// Every `(vertex mask, edge list)` with `lower ⊆ H ⊆ upper`, vertices and
/// edges chosen independently.
pub fn interval_members(g: &PatternGraph, lower: &Subgraph, upper: &Subgraph) -> Vec<(u64, Vec<usize>)> {
    let free_v: Vec<usize> = bits(upper.vertices() & !lower.vertices()).collect();
    let free_e: Vec<usize> = upper.edge_ids().filter(|&e| !lower.has_edge(e)).collect();
    let mut out = Vec::new();
    for vp in 0u64..1 << free_v.len() {
        let vm = bits(vp).fold(lower.vertices(), |m, i| m | 1 << free_v[i]);
        for ep in 0u64..1 << free_e.len() {
            let mut es: Vec<usize> = lower.edge_ids().collect();
            es.extend(bits(ep).map(|i| free_e[i]));
            if es.iter().all(|&e| {
                let (u, v) = g.edge(e);
                vm >> u & 1 == 1 && vm >> v & 1 == 1
            }) {
                out.push((vm, es));
            }
        }
    }
    out
}

/// `min Δ` over the full subgraph interval `[A, U]`.
pub fn delta_star(w: &ThresholdWeighting, u: &Subgraph, a: &Subgraph) -> Rational {
    interval_members(w.graph(), a, u)
        .iter()
        .map(|(v, e)| delta(w, *v, e))
        .min()
        .unwrap()
}

/// Intersection of all minimizers over `[A, U]`.
pub fn gamma(w: &ThresholdWeighting, u: &Subgraph, a: &Subgraph) -> (u64, BTreeSet<usize>) {
    let members = interval_members(w.graph(), a, u);
    let best = members.iter().map(|(v, e)| delta(w, *v, e)).min().unwrap();
    let mut vm = u64::MAX;
    let mut es: Option<BTreeSet<usize>> = None;
    for (v, e) in &members {
        if delta(w, *v, e) == best {
            vm &= v;
            let set: BTreeSet<usize> = e.iter().copied().collect();
            es = Some(match es {
                None => set,
                Some(prev) => prev.intersection(&set).copied().collect(),
            });
        }
    }
    (vm, es.unwrap())
}

/// `κ_Δ(G)` by exhaustive search over all sets of reachable edge subsets.
/// Each union sequence reaches `G` through some such set, and its cost is
/// the max `Δ` over the set; the cheapest closure containing `G` wins.
pub fn kappa_exhaustive(w: &ThresholdWeighting) -> Rational {
    let g = w.graph();
    let m = g.edge_count();
    assert!(m <= 4, "exhaustive oracle is for tiny graphs");
    let full = (1u32 << m) - 1;
    let cost = |mask: u32| {
        let es: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let vs = es.iter().fold(0u64, |acc, &e| {
            let (u, v) = g.edge(e);
            acc | 1 << u | 1 << v
        });
        delta(w, vs, &es)
    };
    let mut best: Option<Rational> = None;
    fn dfs(
        have: &mut Vec<u32>,
        current: Rational,
        full: u32,
        m: usize,
        cost: &dyn Fn(u32) -> Rational,
        best: &mut Option<Rational>,
    ) {
        if best.as_ref().is_some_and(|b| &current >= b) {
            return;
        }
        if have.contains(&full) {
            *best = Some(current);
            return;
        }
        let mut next: BTreeSet<u32> = (0..m).map(|i| 1u32 << i).collect();
        for &a in have.iter() {
            for &b in have.iter() {
                next.insert(a | b);
            }
        }
        for c in next {
            if have.contains(&c) {
                continue;
            }
            have.push(c);
            let cc = cost(c);
            let nc = if cc > current { cc } else { current.clone() };
            dfs(have, nc, full, m, cost, best);
            have.pop();
        }
    }
    let start = Rational::zero() - Rational::from_integer(1_000_000.into());
    dfs(&mut Vec::new(), start, full, m, &cost, &mut best);
    best.unwrap()
}

/// All colored copies of `h`: vertices in increasing order, each block
/// index tried in turn, every pattern edge of `h` checked once both ends
/// are placed.
pub fn rows(x: &ColoredHostGraph, h: &Subgraph) -> Vec<Vec<u32>> {
    let g = x.pattern();
    let order = h.vertex_list();
    let edges: Vec<(usize, usize)> = h
        .edge_ids()
        .map(|e| {
            let (u, v) = g.edge(e);
            let pu = order.iter().position(|&w| w == u).unwrap();
            let pv = order.iter().position(|&w| w == v).unwrap();
            (pu.min(pv), pu.max(pv))
        })
        .collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(order.len());
    fn rec(
        x: &ColoredHostGraph,
        order: &[usize],
        edges: &[(usize, usize)],
        cur: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        let p = cur.len();
        if p == order.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..x.block_size(order[p]) as u32 {
            let ok = edges
                .iter()
                .filter(|&&(_, b)| b == p)
                .all(|&(a, _)| x.has_edge(order[a], cur[a], order[p], i));
            if ok {
                cur.push(i);
                rec(x, order, edges, cur, out);
                cur.pop();
            }
        }
    }
    rec(x, &order, &edges, &mut cur, &mut out);
    out
}

/// Random union sequence: edges in random order, merged along a random
/// binary tree.
pub fn random_sequence(rng: &mut impl Rng, g: &PatternGraph) -> UnionSequence {
    let mut b = SequenceBuilder::new(g);
    let mut pool: Vec<usize> = (0..g.edge_count()).map(|e| b.push_edge(e)).collect();
    while pool.len() > 1 {
        let i = rng.random_range(0..pool.len());
        let x = pool.swap_remove(i);
        let j = rng.random_range(0..pool.len());
        let y = pool[j];
        pool[j] = b.push_union(x, y);
    }
    b.finish()
}

/// Random subgraph `H` with `lower ⊆ H ⊆ upper`.
pub fn random_between(rng: &mut impl Rng, g: &PatternGraph, lower: &Subgraph, upper: &Subgraph) -> Subgraph {
    let mut mask = lower.vertices();
    for v in bits(upper.vertices() & !lower.vertices()) {
        if rng.random_bool(0.5) {
            mask |= 1 << v;
        }
    }
    let edges: Vec<usize> = upper
        .edge_ids()
        .filter(|&e| {
            lower.has_edge(e) || {
                let (u, v) = g.edge(e);
                mask >> u & 1 == 1 && mask >> v & 1 == 1 && rng.random_bool(0.5)
            }
        })
        .collect();
    Subgraph::new(g, mask, edges).unwrap()
}
