//! Union sequences and `κ_Δ(G)`: exact computation by lattice closure,
//! constructive witnesses for cliques, hypercubes and blowups, a heuristic
//! maximizer over weightings, and Hamming-graph analytics.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{hamming_with_cap, mask_vertices, BlowupMap, GraphError, PatternGraph, Subgraph};
use crate::rational::{int, ratio, Rational};
use crate::threshold::{blowup_project, ThresholdWeighting, WeightingError};

/// Default bound on `e(G)` for [`kappa_exact`].
pub const DEFAULT_EDGE_CAP: usize = 13;
/// Hard bound: closure state is indexed by `u32` edge masks.
pub const MAX_EDGE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KappaError {
    #[error("graph has {edges} edges, exact computation bound is {cap}")]
    TooManyEdges { edges: usize, cap: usize },
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("graph has no edges")]
    NoEdges,
    #[error("graph is not a complete graph")]
    NotClique,
    #[error("graph is not a hypercube in lexicographic labeling")]
    NotHypercube,
    #[error("weighting must have alpha = 1 on every vertex")]
    AlphaNotUnit,
    #[error("step {step}: {reason}")]
    Sequence { step: usize, reason: String },
    #[error("bound violated: {0}")]
    BoundViolated(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Weighting(#[from] WeightingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl KappaError {
    /// True when a construction failed one of its own checks.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            KappaError::BoundViolated(_) | KappaError::Weighting(WeightingError::Internal(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Edge(usize),
    Union(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub graph: Subgraph,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionSequence {
    steps: Vec<Step>,
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    edges: Vec<usize>,
    provenance: Provenance,
}

impl UnionSequence {
    /// Wrap raw steps without checking them; see [`validate_sequence`].
    pub fn from_steps(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&Subgraph> {
        self.steps.last().map(|s| &s.graph)
    }

    /// JSON list of `{edges, provenance}` records.
    pub fn to_json(&self) -> String {
        let records: Vec<StepRecord> = self
            .steps
            .iter()
            .map(|s| StepRecord {
                edges: s.graph.edge_ids().collect(),
                provenance: s.provenance,
            })
            .collect();
        serde_json::to_string(&records).expect("sequence serializes")
    }

    pub fn from_json(g: &PatternGraph, text: &str) -> Result<Self, KappaError> {
        let records: Vec<StepRecord> = serde_json::from_str(text).map_err(|e| KappaError::Sequence {
            step: 0,
            reason: format!("malformed JSON: {e}"),
        })?;
        let steps = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                if let Some(&bad) = r.edges.iter().find(|&&e| e >= g.edge_count()) {
                    return Err(KappaError::Sequence {
                        step: i,
                        reason: format!("no edge {bad}"),
                    });
                }
                Ok(Step {
                    graph: Subgraph::from_edges(g, r.edges),
                    provenance: r.provenance,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { steps })
    }
}

/// Builds a union sequence while keeping steps distinct: pushing a graph
/// that is already present returns the existing index.
#[derive(Debug)]
pub struct SequenceBuilder<'g> {
    graph: &'g PatternGraph,
    steps: Vec<Step>,
    index: HashMap<Subgraph, usize>,
}

impl<'g> SequenceBuilder<'g> {
    pub fn new(graph: &'g PatternGraph) -> Self {
        Self {
            graph,
            steps: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn push(&mut self, graph: Subgraph, provenance: Provenance) -> usize {
        if let Some(&i) = self.index.get(&graph) {
            return i;
        }
        let i = self.steps.len();
        self.index.insert(graph.clone(), i);
        self.steps.push(Step { graph, provenance });
        i
    }

    pub fn push_edge(&mut self, e: usize) -> usize {
        self.push(Subgraph::single_edge(self.graph, e), Provenance::Edge(e))
    }

    pub fn push_all_edges(&mut self) {
        for e in 0..self.graph.edge_count() {
            self.push_edge(e);
        }
    }

    pub fn push_union(&mut self, i: usize, j: usize) -> usize {
        let u = self.steps[i].graph.union(&self.steps[j].graph);
        if let Some(&k) = self.index.get(&u) {
            return k;
        }
        self.push(u, Provenance::Union(i, j))
    }

    /// Union of an optional step with another; `None` acts as the empty graph.
    pub fn join(&mut self, a: Option<usize>, b: usize) -> usize {
        match a {
            Some(a) => self.push_union(a, b),
            None => b,
        }
    }

    pub fn step(&self, i: usize) -> &Subgraph {
        &self.steps[i].graph
    }

    pub fn finish(self) -> UnionSequence {
        UnionSequence { steps: self.steps }
    }
}

/// Check the structure of `s` as a union sequence for `g`.
pub fn check_structure(s: &UnionSequence, g: &PatternGraph) -> Result<(), KappaError> {
    let bad = |step: usize, reason: String| Err(KappaError::Sequence { step, reason });
    if s.is_empty() {
        return bad(0, "sequence is empty".into());
    }
    let mut seen: HashMap<&Subgraph, usize> = HashMap::new();
    for (i, step) in s.steps.iter().enumerate() {
        if !step.graph.belongs_to(g) {
            return bad(i, "subgraph belongs to a different graph".into());
        }
        match step.provenance {
            Provenance::Edge(k) => {
                if k >= g.edge_count() || step.graph != Subgraph::single_edge(g, k) {
                    return bad(i, format!("is not the single edge {k}"));
                }
            }
            Provenance::Union(a, b) => {
                if a >= i || b >= i {
                    return bad(i, format!("union of ({a}, {b}) refers to a later step"));
                }
                if step.graph != s.steps[a].graph.union(&s.steps[b].graph) {
                    return bad(i, format!("is not the union of steps {a} and {b}"));
                }
            }
        }
        let ends = step.graph.edge_ids().fold(0u64, |m, e| m | g.edge_mask(e));
        if step.graph.vertices() != ends {
            return bad(i, "has an isolated vertex".into());
        }
        if let Some(j) = seen.insert(&step.graph, i) {
            return bad(i, format!("duplicates step {j}"));
        }
    }
    if s.last() != Some(&Subgraph::full(g)) {
        return bad(s.len() - 1, "last step is not the full graph".into());
    }
    Ok(())
}

/// Structural check plus `max_{H∈S} Δ(H)`.
pub fn validate_sequence(s: &UnionSequence, w: &ThresholdWeighting) -> Result<Rational, KappaError> {
    check_structure(s, w.graph())?;
    let max = s
        .steps
        .iter()
        .map(|st| w.delta_scaled(&st.graph))
        .max()
        .expect("nonempty");
    Ok(w.unscale(max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    WitnessOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureStat {
    pub threshold: Rational,
    pub closure_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaResult {
    pub value: Rational,
    pub witness: UnionSequence,
    pub method: Method,
    pub search_stats: Vec<ClosureStat>,
}

/// Per-mask `Δ` over all nonempty edge subsets, vertex sets taken as the
/// endpoints, compressed to ranks.
struct EdgeLattice {
    full: u32,
    rank: Vec<u32>,
    values: Vec<i128>,
}

fn edge_lattice(w: &ThresholdWeighting) -> EdgeLattice {
    let g = w.graph();
    let e = g.edge_count();
    let size = 1usize << e;
    let mut ends = vec![0u64; size];
    let mut beta = vec![0i128; size];
    let mut delta = vec![0i128; size];
    for m in 1..size {
        let low = m.trailing_zeros() as usize;
        let rest = m & (m - 1);
        ends[m] = ends[rest] | g.edge_mask(low);
        beta[m] = beta[rest] + w.beta_scaled(low);
        delta[m] = w.alpha_mask_scaled(ends[m]) - beta[m];
    }
    let mut values: Vec<i128> = delta[1..].to_vec();
    values.sort_unstable();
    values.dedup();
    let rank = (0..size)
        .map(|m| {
            if m == 0 {
                0
            } else {
                values.binary_search(&delta[m]).unwrap() as u32
            }
        })
        .collect();
    EdgeLattice {
        full: (size - 1) as u32,
        rank,
        values,
    }
}

fn check_exact_input(w: &ThresholdWeighting, cap: usize) -> Result<(), KappaError> {
    let g = w.graph();
    let cap = cap.min(MAX_EDGE_CAP);
    if g.edge_count() > cap {
        return Err(KappaError::TooManyEdges {
            edges: g.edge_count(),
            cap,
        });
    }
    if g.edge_count() == 0 {
        return Err(KappaError::NoEdges);
    }
    if let Some(u) = (0..g.vertex_count()).find(|&u| g.degree(u) == 0) {
        return Err(KappaError::IsolatedVertex(u));
    }
    Ok(())
}

pub fn kappa_exact(w: &ThresholdWeighting) -> Result<KappaResult, KappaError> {
    kappa_exact_with_cap(w, DEFAULT_EDGE_CAP)
}

#[derive(Clone, Copy)]
enum Origin {
    None,
    Edge(u32),
    Union(u32, u32),
}

/// Exact `κ_Δ(G)`.
///
/// Candidate thresholds are the distinct `Δ` values of edge subsets. Rather
/// than testing each threshold from scratch, the closure is grown once while
/// the threshold rises: a union whose `Δ` is above the current threshold is
/// parked in the bucket of its own rank and released when the threshold
/// reaches it. Every generated pair is examined exactly once, and the
/// smallest threshold at which the full edge set appears is `κ_Δ(G)`.
pub fn kappa_exact_with_cap(w: &ThresholdWeighting, cap: usize) -> Result<KappaResult, KappaError> {
    check_exact_input(w, cap)?;
    let g = w.graph();
    let lat = edge_lattice(w);
    let size = lat.rank.len();
    let mut origin = vec![Origin::None; size];
    let mut generated = vec![false; size];
    let mut gen_list: Vec<u32> = Vec::new();
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); lat.values.len()];
    for k in 0..g.edge_count() {
        let m = 1u32 << k;
        origin[m as usize] = Origin::Edge(k as u32);
        buckets[lat.rank[m as usize] as usize].push(m);
    }
    let mut stats = Vec::new();
    let mut answer = None;
    for r in 0..lat.values.len() {
        let mut queue = std::mem::take(&mut buckets[r]);
        while let Some(m) = queue.pop() {
            if generated[m as usize] {
                continue;
            }
            generated[m as usize] = true;
            for &h in &gen_list {
                let u = (m | h) as usize;
                if !matches!(origin[u], Origin::None) {
                    continue;
                }
                origin[u] = Origin::Union(m, h);
                let ru = lat.rank[u] as usize;
                if ru <= r {
                    queue.push(u as u32);
                } else {
                    buckets[ru].push(u as u32);
                }
            }
            gen_list.push(m);
        }
        stats.push(ClosureStat {
            threshold: w.unscale(lat.values[r]),
            closure_size: gen_list.len(),
        });
        if generated[lat.full as usize] {
            answer = Some(r);
            break;
        }
    }
    let r = answer.expect("the full edge set is reached at the largest threshold");
    let value = w.unscale(lat.values[r]);

    let mut builder = SequenceBuilder::new(g);
    let mut step_of: HashMap<u32, usize> = HashMap::new();
    build_witness(lat.full, &origin, &mut builder, &mut step_of);
    let witness = builder.finish();
    let check = validate_sequence(&witness, w)?;
    if check != value {
        return Err(KappaError::BoundViolated(format!(
            "witness max {check} differs from closure threshold {value}"
        )));
    }
    Ok(KappaResult {
        value,
        witness,
        method: Method::Exact,
        search_stats: stats,
    })
}

fn build_witness(
    mask: u32,
    origin: &[Origin],
    builder: &mut SequenceBuilder,
    step_of: &mut HashMap<u32, usize>,
) -> usize {
    if let Some(&i) = step_of.get(&mask) {
        return i;
    }
    let i = match origin[mask as usize] {
        Origin::Edge(k) => builder.push_edge(k as usize),
        Origin::Union(a, b) => {
            let a = build_witness(a, origin, builder, step_of);
            let b = build_witness(b, origin, builder, step_of);
            builder.push_union(a, b)
        }
        Origin::None => unreachable!("every generated mask has an origin"),
    };
    step_of.insert(mask, i);
    i
}

/// Whether the closure of edges under `Δ ≤ t` unions reaches `E(G)`.
/// Computed from scratch at the fixed threshold.
pub fn feasible_at(w: &ThresholdWeighting, t: &Rational) -> Result<bool, KappaError> {
    check_exact_input(w, MAX_EDGE_CAP)?;
    let g = w.graph();
    let e = g.edge_count();
    let delta_of = |m: u32| -> Rational {
        w.delta(&Subgraph::from_edge_mask(g, m as u64))
    };
    let size = 1usize << e;
    let mut ok = vec![None::<bool>; size];
    let allowed = |m: u32, ok: &mut Vec<Option<bool>>| -> bool {
        *ok[m as usize].get_or_insert_with(|| &delta_of(m) <= t)
    };
    let mut inside = vec![false; size];
    let mut list: Vec<u32> = (0..e)
        .map(|k| 1u32 << k)
        .filter(|&m| allowed(m, &mut ok))
        .collect();
    for &m in &list {
        inside[m as usize] = true;
    }
    let mut i = 0;
    while i < list.len() {
        let m = list[i];
        for j in 0..i {
            let u = m | list[j];
            if !inside[u as usize] && allowed(u, &mut ok) {
                inside[u as usize] = true;
                list.push(u);
            }
        }
        i += 1;
    }
    Ok(inside[size - 1])
}

fn require_unit_alpha(w: &ThresholdWeighting) -> Result<(), KappaError> {
    if w.has_unit_alpha() {
        Ok(())
    } else {
        Err(KappaError::AlphaNotUnit)
    }
}

/// `max_i i(k−i)/(k−1) + 1` over `1 ≤ i < k`.
pub fn clique_bound(k: usize) -> Rational {
    if k < 2 {
        return int(0);
    }
    (1..k)
        .map(|i| ratio((i * (k - i)) as i64, (k - 1) as i64))
        .max()
        .unwrap()
        + int(1)
}

/// Greedy nested-clique witness for `K_k` under `α ≡ 1`.
///
/// Sets `U_k ⊇ U_{k−1} ⊇ … ⊇ U_1` are built by repeatedly dropping the
/// vertex whose removal keeps the most `β` weight (ties to the smallest
/// index). The sequence lists every edge, then grows `K[U_i]` into
/// `K[U_{i+1}]` one edge at a time.
pub fn clique_sequence(w: &ThresholdWeighting) -> Result<(UnionSequence, Rational), KappaError> {
    let g = w.graph();
    if !g.is_complete() || g.vertex_count() < 2 {
        return Err(KappaError::NotClique);
    }
    require_unit_alpha(w)?;
    w.validate()?;
    let k = g.vertex_count();
    let mut order = Vec::with_capacity(k);
    let mut remaining = g.all_vertices();
    while remaining.count_ones() > 1 {
        let drop = mask_vertices(remaining)
            .map(|u| {
                let lost: i128 = mask_vertices(remaining & !(1 << u))
                    .map(|v| w.beta_scaled(g.edge_index(u, v).unwrap()))
                    .sum();
                (lost, u)
            })
            .min()
            .unwrap()
            .1;
        order.push(drop);
        remaining &= !(1 << drop);
    }
    order.push(remaining.trailing_zeros() as usize);
    order.reverse();

    let mut b = SequenceBuilder::new(g);
    b.push_all_edges();
    let mut current = g.edge_index(order[0], order[1]).unwrap();
    for i in 2..k {
        for &u in &order[..i] {
            let e = g.edge_index(order[i], u).unwrap();
            current = b.push_union(current, e);
        }
    }
    let seq = b.finish();
    let max = validate_sequence(&seq, w)?;
    let bound = clique_bound(k);
    if max > bound {
        return Err(KappaError::BoundViolated(format!(
            "clique witness max {max} exceeds {bound}"
        )));
    }
    Ok((seq, max))
}

/// `d` if `g` is `Q_d` with vertex `x` adjacent to `x xor 2^i`.
pub fn hypercube_dimension(g: &PatternGraph) -> Option<usize> {
    let n = g.vertex_count();
    if !n.is_power_of_two() || n < 2 {
        return None;
    }
    let d = n.trailing_zeros() as usize;
    let ok = g.edge_count() == d * n / 2
        && g.edges().iter().all(|&(u, v)| (u ^ v).is_power_of_two());
    ok.then_some(d)
}

/// A relabeling of `Q_d`: virtual vertex `y` corresponds to `map[y]`.
#[derive(Clone)]
struct Frame {
    map: Vec<usize>,
}

impl Frame {
    fn identity(d: usize) -> Self {
        Self {
            map: (0..1 << d).collect(),
        }
    }

    fn mask(&self, range: std::ops::Range<usize>) -> u64 {
        range.fold(0, |m, y| m | 1 << self.map[y])
    }

    /// Compose with `y ↦ swap_{i,k−1}(y) xor flip`.
    fn twist(&self, i: usize, k: usize, flip: usize) -> Self {
        let swap = |y: usize| {
            let (bi, bk) = (y >> i & 1, y >> (k - 1) & 1);
            let y = y & !(1 << i) & !(1 << (k - 1));
            y | bi << (k - 1) | bk << i
        };
        Self {
            map: (0..self.map.len()).map(|y| self.map[swap(y) ^ flip]).collect(),
        }
    }
}

struct CubeContext<'a> {
    w: &'a ThresholdWeighting,
    d: usize,
}

impl CubeContext<'_> {
    fn induced(&self, mask: u64) -> Subgraph {
        Subgraph::induced(self.w.graph(), mask)
    }

    /// `β(X) − β_o(X)` scaled by `d` to stay integral: `d·β(X) − 2·e(X)`.
    fn excess(&self, mask: u64) -> Rational {
        let h = self.induced(mask);
        let beta: Rational = h.edge_ids().map(|e| self.w.beta(e)).sum();
        beta * int(self.d as i64) - int(2 * h.edge_count() as i64)
    }

    /// Append a sequence for the frame's `G(a + 2^k)` given the step for
    /// `G(a)`; returns `None` when the result has no edges.
    fn tricky(
        &self,
        b: &mut SequenceBuilder,
        frame: &Frame,
        a: usize,
        k: usize,
        prev: Option<usize>,
    ) -> Option<usize> {
        let block = frame.mask(a..a + (1 << k));
        if k > 0 && self.excess(block) < Rational::zero() {
            // Case 2: grow G(a) through H(i, b) = G(a) ∪ B(i, b).
            let (i, bit) = self.best_split(frame, a, k, true);
            let next = frame.twist(i, k, bit << i);
            let mid = self.tricky(b, &next, a, k - 1, prev);
            return self.tricky(b, &next, a + (1 << (k - 1)), k - 1, mid);
        }
        // Case 1: build B on its own, then join it to G(a) and add the cut.
        let block_step = if k == 0 {
            None
        } else {
            let (i, bit) = self.best_split(frame, a, k, false);
            let next = frame.twist(i, k, (bit << i) ^ a);
            let half = self.tricky(b, &next, 0, k - 1, None);
            self.tricky(b, &next, 1 << (k - 1), k - 1, half)
        };
        let g = self.w.graph();
        let before = frame.mask(0..a);
        let mut current = match (prev, block_step) {
            (Some(p), Some(q)) => Some(b.push_union(p, q)),
            (p, q) => p.or(q),
        };
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            let m = (1u64 << u) | (1u64 << v);
            if m & before != 0 && m & block != 0 {
                current = Some(b.join(current, e));
            }
        }
        current
    }

    /// Argmax of the excess of `B(i, bit)`, or of `G(a) ∪ B(i, bit)` when
    /// `with_prefix`; ties go to the smallest `(i, bit)`.
    fn best_split(&self, frame: &Frame, a: usize, k: usize, with_prefix: bool) -> (usize, usize) {
        let prefix = if with_prefix { frame.mask(0..a) } else { 0 };
        let mut best: Option<(Rational, usize, usize)> = None;
        for i in 0..k {
            for bit in 0..2 {
                let part = (a..a + (1 << k))
                    .filter(|y| (y >> i) & 1 == bit)
                    .fold(prefix, |m, y| m | 1 << frame.map[y]);
                let score = self.excess(part);
                if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                    best = Some((score, i, bit));
                }
            }
        }
        let (_, i, bit) = best.unwrap();
        (i, bit)
    }
}

/// Witness for `Q_d` under any valid `(1, β)`, with max `Δ ≤ 2μ(d)`.
pub fn hypercube_sequence(w: &ThresholdWeighting) -> Result<(UnionSequence, Rational), KappaError> {
    let g = w.graph();
    let d = hypercube_dimension(g).ok_or(KappaError::NotHypercube)?;
    require_unit_alpha(w)?;
    w.validate()?;
    let mut b = SequenceBuilder::new(g);
    b.push_all_edges();
    if d > 1 {
        let ctx = CubeContext { w, d };
        ctx.tricky(&mut b, &Frame::identity(d), 0, d, None);
    }
    let seq = b.finish();
    let max = validate_sequence(&seq, w)?;
    let bound = hypercube_mu(d as u32)? * int(2);
    if max > bound {
        return Err(KappaError::BoundViolated(format!(
            "hypercube witness max {max} exceeds 2μ = {bound}"
        )));
    }
    Ok((seq, max))
}

/// Lift a union sequence for `G` to `G↑q`: a cumulative sequence for each
/// `e↑q` in edge order, then `H↑q` for every step `H`.
pub fn blowup_sequence(s: &UnionSequence, map: &BlowupMap) -> Result<UnionSequence, KappaError> {
    check_structure(s, map.source())?;
    let src = map.source();
    let dst = map.result();
    let mut b = SequenceBuilder::new(dst);
    b.push_all_edges();
    let mut lifted_edge = Vec::with_capacity(src.edge_count());
    for e in 0..src.edge_count() {
        let target = map.lift(&Subgraph::single_edge(src, e));
        let mut current = None;
        for f in target.edge_ids() {
            current = Some(b.join(current, f));
        }
        lifted_edge.push(current.expect("a lifted edge has edges"));
    }
    let mut index = Vec::with_capacity(s.len());
    for step in s.steps() {
        let i = match step.provenance {
            Provenance::Edge(k) => lifted_edge[k],
            Provenance::Union(x, y) => b.push_union(index[x], index[y]),
        };
        debug_assert_eq!(b.step(i), &map.lift(&step.graph));
        index.push(i);
    }
    let out = b.finish();
    check_structure(&out, dst)?;
    Ok(out)
}

/// [`blowup_sequence`] evaluated under `w` on `G↑q`, checked against
/// `max(2q, q·max Δ′(S))` where `Δ′` is the projection of `w`.
pub fn blowup_sequence_checked(
    s: &UnionSequence,
    map: &BlowupMap,
    w: &ThresholdWeighting,
) -> Result<(UnionSequence, Rational, Rational), KappaError> {
    let out = blowup_sequence(s, map)?;
    let max = validate_sequence(&out, w)?;
    let projected = blowup_project(w, map)?;
    let inner = validate_sequence(s, &projected)?;
    let q = int(map.q() as i64);
    let bound = std::cmp::max(&q * int(2), &q * inner);
    if max > bound {
        return Err(KappaError::BoundViolated(format!(
            "blowup witness max {max} exceeds {bound}"
        )));
    }
    Ok((out, max, bound))
}

/// Best available witness without exhaustive search: the clique or
/// hypercube construction when they apply, otherwise all edges followed
/// by their running union.
pub fn kappa_witness(w: &ThresholdWeighting) -> Result<KappaResult, KappaError> {
    let g = w.graph();
    if g.edge_count() == 0 {
        return Err(KappaError::NoEdges);
    }
    if let Some(u) = (0..g.vertex_count()).find(|&u| g.degree(u) == 0) {
        return Err(KappaError::IsolatedVertex(u));
    }
    let built = if w.has_unit_alpha() && g.is_complete() {
        Some(clique_sequence(w)?)
    } else if w.has_unit_alpha() && hypercube_dimension(g).is_some() {
        Some(hypercube_sequence(w)?)
    } else {
        None
    };
    let (witness, value) = match built {
        Some(x) => x,
        None => {
            let mut b = SequenceBuilder::new(g);
            b.push_all_edges();
            let mut current = 0;
            for e in 1..g.edge_count() {
                current = b.push_union(current, e);
            }
            let seq = b.finish();
            let max = validate_sequence(&seq, w)?;
            (seq, max)
        }
    };
    Ok(KappaResult {
        value,
        witness,
        method: Method::WitnessOnly,
        search_stats: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Grid resolution: perturbed `β` values are rounded to multiples of `1/grid`.
    pub grid: u32,
}

impl SearchParams {
    pub fn new(seed: u64) -> Self {
        Self {
            iterations: 40,
            restarts: 4,
            seed,
            grid: 24,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub weighting: ThresholdWeighting,
    pub result: KappaResult,
    pub baseline: Rational,
    pub accepted_moves: usize,
}

/// Heuristic lower bound on `κ(G) = max_Δ κ_Δ(G)` over weightings with
/// `α ≡ 1`.
///
/// Each restart perturbs `β` multiplicatively, rounds to a `1/grid` lattice,
/// rescales uniformly so that `Δ(G) = 0`, and keeps the candidate when it
/// validates and raises `κ_Δ`. The uniform-walk weighting is always in the
/// pool, so the result is at least its `κ`.
pub fn kappa_search(g: Arc<PatternGraph>, params: SearchParams) -> Result<SearchOutcome, KappaError> {
    let base = ThresholdWeighting::uniform_walk(g.clone())?;
    let base_result = kappa_exact(&base)?;
    let baseline = base_result.value.clone();
    let runs: Vec<Result<(ThresholdWeighting, KappaResult, usize), KappaError>> = (0..params.restarts)
        .into_par_iter()
        .map(|r| search_restart(&base, &base_result, params, r as u64))
        .collect();
    let mut best = (base, base_result, 0usize);
    for run in runs {
        let run = run?;
        if run.1.value > best.1.value
            || (run.1.value == best.1.value && run.0.betas() < best.0.betas())
        {
            best = run;
        }
    }
    Ok(SearchOutcome {
        weighting: best.0,
        result: best.1,
        baseline,
        accepted_moves: best.2,
    })
}

fn search_restart(
    base: &ThresholdWeighting,
    base_result: &KappaResult,
    params: SearchParams,
    restart: u64,
) -> Result<(ThresholdWeighting, KappaResult, usize), KappaError> {
    let g = base.graph_arc().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(crate::randgraph::derive_seed(params.seed, 0x6b61, restart));
    let mut current = base.clone();
    let mut current_result = base_result.clone();
    let mut accepted = 0;
    let total = int(g.vertex_count() as i64);
    let grid = BigInt::from(params.grid.max(1));
    for _ in 0..params.iterations {
        let scale = rng.random_range(0.05..0.6);
        let perturbed: Vec<Rational> = current
            .betas()
            .iter()
            .map(|b| {
                let factor = 1.0 + scale * rng.random_range(-1.0..1.0f64);
                let x = crate::rational::to_f64(b) * factor * params.grid as f64;
                Rational::new(BigInt::from(x.round().max(0.0) as i64), grid.clone())
            })
            .collect();
        let sum: Rational = perturbed.iter().sum();
        if !sum.is_positive() {
            continue;
        }
        let factor = &total / sum;
        let beta: Vec<Rational> = perturbed.into_iter().map(|b| b * &factor).collect();
        let Ok(candidate) = ThresholdWeighting::with_unit_alpha(g.clone(), beta) else {
            continue;
        };
        if candidate.validate().is_err() {
            continue;
        }
        let result = kappa_exact(&candidate)?;
        if result.value > current_result.value {
            current = candidate;
            current_result = result;
            accepted += 1;
        }
    }
    Ok((current, current_result, accepted))
}

/// `μ(d) = max_a Δ_o(G(a))` where `G(a)` is the lexicographic prefix of
/// size `a`, computed as the largest prefix boundary divided by `d`.
pub fn hypercube_mu(d: u32) -> Result<Rational, KappaError> {
    if d == 0 || d > 20 {
        return Err(KappaError::OutOfRange(format!("hypercube_mu needs 1 <= d <= 20, got {d}")));
    }
    let max = crate::graph::PrefixBoundaryScan::new(d)
        .map(|(_, b)| b)
        .max()
        .unwrap();
    let closed: u64 = (0..d).step_by(2).map(|j| 1u64 << (d - 1 - j)).sum();
    if max != closed {
        return Err(KappaError::BoundViolated(format!(
            "max prefix boundary {max} differs from closed form {closed}"
        )));
    }
    if 3 * max >= 1u64 << (d + 1) {
        return Err(KappaError::BoundViolated(format!(
            "prefix boundary {max} is not below 2^(d+1)/3"
        )));
    }
    Ok(ratio(max as i64, d as i64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBounds {
    /// Distinct eigenvalues in decreasing order with multiplicities.
    pub spectrum: Vec<(Rational, u64)>,
    pub lambda2: Rational,
    pub cheeger_h_bound: Rational,
    pub kappa_bound: Rational,
    /// Whether the eigenvectors were verified against the adjacency matrix.
    pub verified: bool,
}

/// Spectral data for the Hamming graph `K_q^d`.
///
/// The spectrum of `K_q` is `{q−1, −1^{(q−1)}}`; the Cartesian power adds
/// one eigenvalue per coordinate. For `q ≤ 4`, `d ≤ 3` every tensor-product
/// eigenvector is checked exactly against the adjacency matrix and the
/// vectors are checked to form a basis.
pub fn kappa_lower_bounds(q: usize, d: usize) -> Result<SpectralBounds, KappaError> {
    if q < 2 || d < 1 {
        return Err(KappaError::OutOfRange(format!("need q >= 2 and d >= 1, got ({q}, {d})")));
    }
    if (q as f64).powi(d as i32) > 1e15 {
        return Err(KappaError::OutOfRange(format!("q^d too large for ({q}, {d})")));
    }
    let top = (q - 1) as i64;
    let mut spectrum = Vec::with_capacity(d + 1);
    for t in (0..=d).rev() {
        let value = top * t as i64 - (d - t) as i64;
        let mult = binomial(d, t) * (q as u64 - 1).pow((d - t) as u32);
        spectrum.push((int(value), mult));
    }
    let lambda2 = spectrum
        .get(1)
        .map_or_else(|| spectrum[0].0.clone(), |s| s.0.clone());
    let deg = int((d * (q - 1)) as i64);
    let cheeger_h_bound = (&deg - &lambda2) / int(2);
    let size = int((q as i64).pow(d as u32));
    let kappa_bound = size * (Rational::one() - &lambda2 / &deg) / int(6);
    let verified = if q <= 4 && d <= 3 {
        verify_eigenvectors(q, d)?;
        true
    } else {
        false
    };
    Ok(SpectralBounds {
        spectrum,
        lambda2,
        cheeger_h_bound,
        kappa_bound,
        verified,
    })
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn verify_eigenvectors(q: usize, d: usize) -> Result<(), KappaError> {
    let g = hamming_with_cap(q, d, crate::graph::MAX_VERTEX_CAP)?;
    let n = g.vertex_count();
    // K_q eigenvectors: all-ones for q−1, e_0 − e_j for −1.
    let base = |j: usize, x: usize| -> i64 {
        match (j, x) {
            (0, _) => 1,
            (_, 0) => 1,
            (j, x) if j == x => -1,
            _ => 0,
        }
    };
    let mut vectors = Vec::with_capacity(n);
    for choice in 0..n {
        let js = crate::graph::hamming_coords(q, d, choice);
        let lambda: i64 = js.iter().map(|&j| if j == 0 { (q - 1) as i64 } else { -1 }).sum();
        let x: Vec<i64> = (0..n)
            .map(|v| {
                let coords = crate::graph::hamming_coords(q, d, v);
                js.iter().zip(&coords).map(|(&j, &c)| base(j, c)).product()
            })
            .collect();
        for v in 0..n {
            let ax: i64 = mask_vertices(g.neighbors(v)).map(|u| x[u]).sum();
            if ax != lambda * x[v] {
                return Err(KappaError::BoundViolated(format!(
                    "eigenvector {choice} fails at vertex {v}"
                )));
            }
        }
        vectors.push(x);
    }
    if integer_rank(vectors) != n {
        return Err(KappaError::BoundViolated("eigenvectors are not a basis".into()));
    }
    Ok(())
}

/// Rank by fraction-free elimination over exact rationals.
fn integer_rank(rows: Vec<Vec<i64>>) -> usize {
    let mut m: Vec<Vec<Rational>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(int).collect())
        .collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] / &m[rank][c];
                for cc in c..cols {
                    let sub = &f * &m[rank][cc];
                    m[r][cc] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathDecomposition {
    pub bags: Vec<Vec<u32>>,
    pub width: usize,
}

/// Path decomposition of `Q_d` whose `k`-th bag holds the vertices with
/// `k` or `k−1` ones; all three decomposition conditions are checked.
pub fn hypercube_path_decomposition(d: u32) -> Result<PathDecomposition, KappaError> {
    if d == 0 || d > 16 {
        return Err(KappaError::OutOfRange(format!("path decomposition needs 1 <= d <= 16, got {d}")));
    }
    let n = 1u32 << d;
    let bags: Vec<Vec<u32>> = (1..=d)
        .map(|k| (0..n).filter(|x| x.count_ones() == k || x.count_ones() + 1 == k).collect())
        .collect();
    let bag_of = |x: u32, k: usize| bags[k].binary_search(&x).is_ok();
    for x in 0..n {
        let holding: Vec<usize> = (0..bags.len()).filter(|&k| bag_of(x, k)).collect();
        let contiguous = holding.windows(2).all(|w| w[1] == w[0] + 1);
        if holding.is_empty() || !contiguous {
            return Err(KappaError::BoundViolated(format!("vertex {x} breaks the decomposition")));
        }
        for i in 0..d {
            let y = x ^ (1 << i);
            if x < y && !(0..bags.len()).any(|k| bag_of(x, k) && bag_of(y, k)) {
                return Err(KappaError::BoundViolated(format!("edge ({x}, {y}) is in no bag")));
            }
        }
    }
    let width = bags.iter().map(Vec::len).max().unwrap() - 1;
    Ok(PathDecomposition { bags, width })
}

/// `κ` as a float, for display.
pub fn approx(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{blowup, hypercube};
    use crate::threshold::{random_walk_weighting, uniform_walk};

    fn arc(g: PatternGraph) -> Arc<PatternGraph> {
        Arc::new(g)
    }

    #[test]
    fn validate_sequence_examples() {
        let g = arc(PatternGraph::complete(3).unwrap());
        let w = uniform_walk(g.clone()).unwrap();
        let mut b = SequenceBuilder::new(&g);
        let e0 = b.push_edge(0);
        let e1 = b.push_edge(1);
        let u = b.push_union(e0, e1);
        let e2 = b.push_edge(2);
        b.push_union(u, e2);
        let s = b.finish();
        let deltas: Vec<Rational> = s.steps().iter().map(|st| w.delta(&st.graph)).collect();
        assert_eq!(deltas, vec![int(1), int(1), int(1), int(1), int(0)]);
        assert_eq!(validate_sequence(&s, &w).unwrap(), int(1));

        let edge = arc(PatternGraph::complete(2).unwrap());
        let we = uniform_walk(edge.clone()).unwrap();
        let mut b = SequenceBuilder::new(&edge);
        b.push_edge(0);
        assert_eq!(validate_sequence(&b.finish(), &we).unwrap(), int(0));

        let mut b = SequenceBuilder::new(&g);
        b.push_edge(0);
        b.push_edge(1);
        let err = validate_sequence(&b.finish(), &w).unwrap_err();
        assert!(matches!(err, KappaError::Sequence { step: 1, .. }));

        let dup = UnionSequence::from_steps(vec![
            Step { graph: Subgraph::single_edge(&edge, 0), provenance: Provenance::Edge(0) },
            Step { graph: Subgraph::single_edge(&edge, 0), provenance: Provenance::Edge(0) },
        ]);
        assert!(matches!(validate_sequence(&dup, &we), Err(KappaError::Sequence { step: 1, .. })));
        let forward = UnionSequence::from_steps(vec![Step {
            graph: Subgraph::single_edge(&edge, 0),
            provenance: Provenance::Union(0, 1),
        }]);
        assert!(matches!(validate_sequence(&forward, &we), Err(KappaError::Sequence { step: 0, .. })));
    }

    #[test]
    fn kappa_exact_examples() {
        let k3 = uniform_walk(arc(PatternGraph::complete(3).unwrap())).unwrap();
        let r = kappa_exact(&k3).unwrap();
        assert_eq!(r.value, int(1));
        assert_eq!(validate_sequence(&r.witness, &k3).unwrap(), int(1));
        let p3 = uniform_walk(arc(PatternGraph::path(3).unwrap())).unwrap();
        assert_eq!(kappa_exact(&p3).unwrap().value, ratio(1, 2));
        let e = uniform_walk(arc(PatternGraph::complete(2).unwrap())).unwrap();
        assert_eq!(kappa_exact(&e).unwrap().value, int(0));
        let big = uniform_walk(arc(PatternGraph::complete(6).unwrap())).unwrap();
        assert!(matches!(kappa_exact(&big), Err(KappaError::TooManyEdges { .. })));
        let iso = arc(PatternGraph::build(3, &[(0, 1)]).unwrap());
        let w = ThresholdWeighting::new(iso, vec![int(1), int(1), int(0)], vec![int(2)]).unwrap();
        assert_eq!(kappa_exact(&w).unwrap_err(), KappaError::IsolatedVertex(2));
    }

    #[test]
    fn closure_feasibility_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = arc(hypercube(3).unwrap());
        for _ in 0..3 {
            let w = random_walk_weighting(g.clone(), &mut rng, 4, true).unwrap();
            let r = kappa_exact(&w).unwrap();
            let sizes: Vec<usize> = r.search_stats.iter().map(|s| s.closure_size).collect();
            assert!(sizes.windows(2).all(|p| p[0] <= p[1]));
            for stat in &r.search_stats {
                assert_eq!(feasible_at(&w, &stat.threshold).unwrap(), stat.threshold >= r.value);
            }
        }
    }

    #[test]
    fn clique_sequence_examples() {
        let k3 = uniform_walk(arc(PatternGraph::complete(3).unwrap())).unwrap();
        let (s, max) = clique_sequence(&k3).unwrap();
        assert!(max <= int(2));
        assert_eq!(validate_sequence(&s, &k3).unwrap(), max);
        assert_eq!(clique_bound(4), ratio(7, 3));
        let k4 = uniform_walk(arc(PatternGraph::complete(4).unwrap())).unwrap();
        assert!(clique_sequence(&k4).unwrap().1 <= ratio(7, 3));
        let k2 = uniform_walk(arc(PatternGraph::complete(2).unwrap())).unwrap();
        let (s, max) = clique_sequence(&k2).unwrap();
        assert_eq!((s.len(), max), (1, int(0)));
        let p3 = uniform_walk(arc(PatternGraph::path(3).unwrap())).unwrap();
        assert_eq!(clique_sequence(&p3).unwrap_err(), KappaError::NotClique);
    }

    #[test]
    fn hypercube_sequence_examples() {
        let q2 = uniform_walk(arc(hypercube(2).unwrap())).unwrap();
        let (_, max) = hypercube_sequence(&q2).unwrap();
        assert!(max <= int(2));
        assert!(kappa_exact(&q2).unwrap().value <= max);
        let q3 = uniform_walk(arc(hypercube(3).unwrap())).unwrap();
        assert!(hypercube_sequence(&q3).unwrap().1 <= ratio(10, 3));
        let q1 = uniform_walk(arc(hypercube(1).unwrap())).unwrap();
        let (s, max) = hypercube_sequence(&q1).unwrap();
        assert_eq!((s.len(), max), (1, int(0)));
        let k3 = uniform_walk(arc(PatternGraph::complete(3).unwrap())).unwrap();
        assert_eq!(hypercube_sequence(&k3).unwrap_err(), KappaError::NotHypercube);
    }

    #[test]
    fn hypercube_sequence_random_weightings() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [2, 3, 4] {
            let g = arc(hypercube(d).unwrap());
            for _ in 0..10 {
                let w = random_walk_weighting(g.clone(), &mut rng, 6, true).unwrap();
                let (s, max) = hypercube_sequence(&w).unwrap();
                assert_eq!(validate_sequence(&s, &w).unwrap(), max);
            }
        }
    }

    #[test]
    fn blowup_sequence_examples() {
        let k2 = PatternGraph::complete(2).unwrap();
        let mut b = SequenceBuilder::new(&k2);
        b.push_edge(0);
        let s = b.finish();
        let map = blowup(&k2, 2).unwrap();
        let lifted = blowup_sequence(&s, &map).unwrap();
        check_structure(&lifted, map.result()).unwrap();

        let one = blowup(&k2, 1).unwrap();
        assert_eq!(blowup_sequence(&s, &one).unwrap().len(), 1);

        let k3 = PatternGraph::complete(3).unwrap();
        let map = blowup(&k3, 2).unwrap();
        let w = uniform_walk(arc(map.result().clone())).unwrap();
        let projected = blowup_project(&w, &map).unwrap();
        let opt = kappa_exact(&projected).unwrap();
        let (_, max, _) = blowup_sequence_checked(&opt.witness, &map, &w).unwrap();
        assert!(max <= int(2) * std::cmp::max(opt.value, int(2)));
    }

    #[test]
    fn kappa_search_examples() {
        let k3 = arc(PatternGraph::complete(3).unwrap());
        let out = kappa_search(k3, SearchParams { iterations: 10, ..SearchParams::new(1) }).unwrap();
        assert!(out.result.value >= int(1));
        assert_eq!(out.baseline, int(1));
        let edge = arc(PatternGraph::complete(2).unwrap());
        let out = kappa_search(edge, SearchParams::new(2)).unwrap();
        assert_eq!(out.result.value, int(0));
        let q2 = arc(hypercube(2).unwrap());
        let params = SearchParams { iterations: 10, ..SearchParams::new(3) };
        let a = kappa_search(q2.clone(), params).unwrap();
        assert!(a.result.value >= a.baseline);
        let b = kappa_search(q2, params).unwrap();
        assert_eq!(a.weighting, b.weighting);
    }

    #[test]
    fn mu_examples() {
        assert_eq!(hypercube_mu(1).unwrap(), int(1));
        assert_eq!(hypercube_mu(2).unwrap(), int(1));
        assert_eq!(hypercube_mu(3).unwrap(), ratio(5, 3));
        for d in 1..=20 {
            hypercube_mu(d).unwrap();
        }
        assert!(hypercube_mu(21).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let b = kappa_lower_bounds(2, 3).unwrap();
        assert_eq!(b.lambda2, int(1));
        assert_eq!(b.kappa_bound, ratio(8, 9));
        assert!(b.verified);
        let b = kappa_lower_bounds(5, 1).unwrap();
        assert_eq!(b.lambda2, int(-1));
        assert_eq!(b.kappa_bound, int(5) * (int(1) + ratio(1, 4)) / int(6));
        let b = kappa_lower_bounds(2, 1).unwrap();
        assert_eq!((b.lambda2, b.cheeger_h_bound), (int(-1), int(1)));
        for q in 2..=4 {
            for d in 1..=3 {
                let b = kappa_lower_bounds(q, d).unwrap();
                assert_eq!(b.lambda2, int((d * (q - 1)) as i64 - q as i64));
                let total: u64 = b.spectrum.iter().map(|s| s.1).sum();
                assert_eq!(total, (q as u64).pow(d as u32));
            }
        }
    }

    #[test]
    fn path_decomposition_examples() {
        let p = hypercube_path_decomposition(2).unwrap();
        assert_eq!(p.bags.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3]);
        assert_eq!(p.width, 2);
        assert_eq!(hypercube_path_decomposition(3).unwrap().width, 5);
        let p = hypercube_path_decomposition(1).unwrap();
        assert_eq!((p.bags, p.width), (vec![vec![0, 1]], 1));
        hypercube_path_decomposition(16).unwrap();
    }

    #[test]
    fn sequence_json_round_trip() {
        let w = uniform_walk(arc(PatternGraph::path(4).unwrap())).unwrap();
        let r = kappa_exact(&w).unwrap();
        let back = UnionSequence::from_json(w.graph(), &r.witness.to_json()).unwrap();
        assert_eq!(back, r.witness);
    }
}
