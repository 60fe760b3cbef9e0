//! Deciding and listing colored copies of a pattern in a host graph.
//!
//! The backtracking enumerator here is the reference oracle; the join
//! solver and the trie solver are checked against it.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{interval, mask_vertices, Subgraph};
use crate::kappa::{check_structure, KappaError, Provenance, UnionSequence};
use crate::randgraph::ColoredHostGraph;
use crate::rational::Rational;
use crate::threshold::{delta_star, WeightingError};

pub const DEFAULT_BRUTE_FORCE_CAP: f64 = 1e8;
pub const DEFAULT_ROW_CAP: usize = 20_000_000;
pub const DEFAULT_CAPACITY_EXPONENT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("{product:.3e} candidate tuples exceed the brute-force cap {cap:.3e}")]
    BruteForceCap { product: f64, cap: f64 },
    #[error("step {step} produced {rows} rows, above the cap of {cap}")]
    RowCap { step: usize, rows: usize, cap: usize },
    #[error("trie overflow at level {level}: {count} children, capacity {capacity}")]
    TrieOverflow { level: usize, count: usize, capacity: usize },
    #[error("trie orders do not share the common-vertex prefix")]
    IncompatiblePrefix,
    #[error("invalid vertex order: {0}")]
    BadOrder(String),
    #[error("subgraph is not contained in the universe")]
    NotContained,
    #[error("subgraph belongs to a different pattern")]
    ForeignSubgraph,
    #[error("instance assigns {got} vertices, expected {expected}")]
    InstanceShape { expected: usize, got: usize },
    #[error(transparent)]
    Sequence(#[from] KappaError),
    #[error(transparent)]
    Weighting(#[from] WeightingError),
    #[error("internal check failed: {0}")]
    Internal(String),
}

/// The colored copies of a pattern subgraph `H`: one row per copy, holding
/// the block index of each vertex of `H` in increasing vertex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceList {
    subgraph: Subgraph,
    vertices: Vec<usize>,
    rows: Vec<u32>,
    /// Vertex subset the rows are currently sorted by, if any.
    sort_key: Option<Vec<usize>>,
}

impl InstanceList {
    fn new(subgraph: Subgraph, mut rows: Vec<u32>, width: usize) -> Self {
        let vertices = subgraph.vertex_list();
        debug_assert_eq!(vertices.len(), width);
        if width > 0 {
            let mut chunks: Vec<&[u32]> = rows.chunks(width).collect();
            chunks.sort_unstable();
            chunks.dedup();
            rows = chunks.concat();
        }
        Self {
            sort_key: Some(vertices.clone()),
            subgraph,
            vertices,
            rows,
        }
    }

    pub fn subgraph(&self) -> &Subgraph {
        &self.subgraph
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn width(&self) -> usize {
        self.vertices.len()
    }

    pub fn len(&self) -> usize {
        if self.width() == 0 {
            usize::from(!self.rows.is_empty())
        } else {
            self.rows.len() / self.width()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sort_key(&self) -> Option<&[usize]> {
        self.sort_key.as_deref()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        let w = self.width();
        (0..self.len()).map(move |i| &self.rows[i * w..(i + 1) * w])
    }

    pub fn contains(&self, row: &[u32]) -> bool {
        let w = self.width();
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.rows[mid * w..(mid + 1) * w].cmp(row) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Backtracking enumerator over `V(H)` in increasing order. Candidates for a
/// vertex come from the adjacency list of its first earlier neighbor.
struct Enumerator<'a> {
    x: &'a ColoredHostGraph,
    order: Vec<usize>,
    earlier: Vec<Vec<usize>>,
}

impl<'a> Enumerator<'a> {
    fn new(x: &'a ColoredHostGraph, h: &Subgraph) -> Self {
        let g = x.pattern();
        let order = h.vertex_list();
        let earlier = order
            .iter()
            .enumerate()
            .map(|(p, &u)| {
                (0..p)
                    .filter(|&q| g.edge_index(order[q], u).is_some_and(|e| h.has_edge(e)))
                    .collect()
            })
            .collect();
        Self { x, order, earlier }
    }

    fn candidates(&self, p: usize, assigned: &[u32]) -> Vec<u32> {
        let u = self.order[p];
        let nbrs = &self.earlier[p];
        let Some(&q) = nbrs.first() else {
            return (0..self.x.block_size(u) as u32).collect();
        };
        let g = self.x.pattern();
        let w = self.order[q];
        let e = g.edge_index(w, u).unwrap();
        self.x
            .block_edges(e)
            .partners(w, assigned[q])
            .iter()
            .copied()
            .filter(|&i| {
                nbrs[1..]
                    .iter()
                    .all(|&r| self.x.has_edge(self.order[r], assigned[r], u, i))
            })
            .collect()
    }

    fn admissible(&self, p: usize, assigned: &[u32], i: u32) -> bool {
        let u = self.order[p];
        i < self.x.block_size(u) as u32
            && self.earlier[p]
                .iter()
                .all(|&r| self.x.has_edge(self.order[r], assigned[r], u, i))
    }

    /// Visit every row consistent with `fixed` (per position of `order`).
    fn run(&self, fixed: &[Option<u32>], visit: &mut impl FnMut(&[u32])) {
        let mut assigned = vec![0u32; self.order.len()];
        self.rec(0, fixed, &mut assigned, visit);
    }

    fn rec(&self, p: usize, fixed: &[Option<u32>], assigned: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
        if p == self.order.len() {
            visit(assigned);
            return;
        }
        if let Some(i) = fixed[p] {
            if self.admissible(p, assigned, i) {
                assigned[p] = i;
                self.rec(p + 1, fixed, assigned, visit);
            }
            return;
        }
        for i in self.candidates(p, assigned) {
            assigned[p] = i;
            self.rec(p + 1, fixed, assigned, visit);
        }
    }
}

fn check_member(x: &ColoredHostGraph, h: &Subgraph) -> Result<(), SolverError> {
    if h.belongs_to(x.pattern()) {
        Ok(())
    } else {
        Err(SolverError::ForeignSubgraph)
    }
}

fn candidate_product(x: &ColoredHostGraph, mask: u64) -> f64 {
    mask_vertices(mask).map(|u| x.block_size(u) as f64).product()
}

pub fn brute_force(x: &ColoredHostGraph, h: &Subgraph) -> Result<InstanceList, SolverError> {
    brute_force_with_cap(x, h, DEFAULT_BRUTE_FORCE_CAP)
}

/// Every `H`-colored subgraph of `x`. The candidate space `Π m_u` must be
/// within `cap`; the first vertex's range is split across threads.
pub fn brute_force_with_cap(x: &ColoredHostGraph, h: &Subgraph, cap: f64) -> Result<InstanceList, SolverError> {
    check_member(x, h)?;
    let product = candidate_product(x, h.vertices());
    if product > cap {
        return Err(SolverError::BruteForceCap { product, cap });
    }
    let width = h.vertex_count();
    if width == 0 {
        return Ok(InstanceList::new(h.clone(), vec![0], 0));
    }
    let en = Enumerator::new(x, h);
    let first = en.order[0];
    let chunks: Vec<Vec<u32>> = (0..x.block_size(first) as u32)
        .into_par_iter()
        .map(|i| {
            let mut fixed = vec![None; width];
            fixed[0] = Some(i);
            let mut rows = Vec::new();
            en.run(&fixed, &mut |r| rows.extend_from_slice(r));
            rows
        })
        .collect();
    Ok(InstanceList::new(h.clone(), chunks.concat(), width))
}

/// Number of `U`-colored subgraphs of `x` that contain the `A`-instance
/// `instance` (block indices for `V(A)` in increasing vertex order).
pub fn count_extensions(
    x: &ColoredHostGraph,
    instance: &[u32],
    a: &Subgraph,
    u: &Subgraph,
) -> Result<u64, SolverError> {
    count_extensions_with_cap(x, instance, a, u, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn count_extensions_with_cap(
    x: &ColoredHostGraph,
    instance: &[u32],
    a: &Subgraph,
    u: &Subgraph,
    cap: f64,
) -> Result<u64, SolverError> {
    check_member(x, a)?;
    check_member(x, u)?;
    if !a.is_subgraph_of(u) {
        return Err(SolverError::NotContained);
    }
    if instance.len() != a.vertex_count() {
        return Err(SolverError::InstanceShape {
            expected: a.vertex_count(),
            got: instance.len(),
        });
    }
    let product = candidate_product(x, u.vertices() & !a.vertices());
    if product > cap {
        return Err(SolverError::BruteForceCap { product, cap });
    }
    if u.vertex_count() == 0 {
        return Ok(1);
    }
    let en = Enumerator::new(x, u);
    let a_vertices = a.vertex_list();
    let fixed: Vec<Option<u32>> = en
        .order
        .iter()
        .map(|v| a_vertices.iter().position(|w| w == v).map(|k| instance[k]))
        .collect();
    let mut count = 0u64;
    en.run(&fixed, &mut |_| count += 1);
    Ok(count)
}

/// `|Sub_H(X)|`, the product of the counts of the connected components of
/// `H` (an isolated vertex `u` contributes `m_u`).
pub fn count_copies(x: &ColoredHostGraph, h: &Subgraph) -> Result<u128, SolverError> {
    check_member(x, h)?;
    let g = x.pattern();
    let mut total = 1u128;
    for c in components_of(g, h) {
        let part = restrict(g, h, c);
        let count = if part.vertex_count() == 1 {
            x.block_size(part.vertex_list()[0]) as u128
        } else {
            let en = Enumerator::new(x, &part);
            let mut k = 0u128;
            en.run(&vec![None; part.vertex_count()], &mut |_| k += 1);
            k
        };
        total = total.saturating_mul(count);
        if total == 0 {
            break;
        }
    }
    Ok(total)
}

fn edge_list(x: &ColoredHostGraph, e: usize) -> InstanceList {
    let g = x.pattern();
    let (u, v) = g.edge(e);
    let blocks = x.block_edges(e);
    let rows: Vec<u32> = if u < v {
        blocks.pairs().iter().flat_map(|&(i, j)| [i, j]).collect()
    } else {
        blocks.pairs().iter().flat_map(|&(i, j)| [j, i]).collect()
    };
    InstanceList::new(Subgraph::single_edge(g, e), rows, 2)
}

/// Sort a list by its projection onto `key` (positions within the row),
/// breaking ties by the full row.
fn sort_by_projection(list: &mut InstanceList, key_vertices: &[usize]) {
    if list.sort_key.as_deref() == Some(key_vertices) {
        return;
    }
    let w = list.width();
    let pos: Vec<usize> = key_vertices
        .iter()
        .map(|v| list.vertices.iter().position(|x| x == v).unwrap())
        .collect();
    let mut chunks: Vec<&[u32]> = list.rows.chunks(w).collect();
    chunks.sort_by(|a, b| {
        pos.iter()
            .map(|&p| a[p])
            .cmp(pos.iter().map(|&p| b[p]))
            .then_with(|| a.cmp(b))
    });
    list.rows = chunks.concat();
    list.sort_key = Some(key_vertices.to_vec());
}

/// Sort-merge join of two lists on their shared vertices.
///
/// Both sides are sorted lexicographically by their projection onto the
/// shared vertices. Two cursors advance the smaller key; on a tie the
/// matching block of each side is located and every pair from the two
/// blocks is emitted.
fn merge_join(
    left: &mut InstanceList,
    right: &mut InstanceList,
    step: usize,
    row_cap: usize,
) -> Result<InstanceList, SolverError> {
    let h = left.subgraph.union(&right.subgraph);
    let shared: Vec<usize> = mask_vertices(left.subgraph.vertices() & right.subgraph.vertices()).collect();
    sort_by_projection(left, &shared);
    sort_by_projection(right, &shared);
    let out_vertices = h.vertex_list();
    let (lw, rw, ow) = (left.width(), right.width(), out_vertices.len());
    let lkey: Vec<usize> = shared.iter().map(|v| left.vertices.iter().position(|x| x == v).unwrap()).collect();
    let rkey: Vec<usize> = shared.iter().map(|v| right.vertices.iter().position(|x| x == v).unwrap()).collect();
    // For each output vertex, where to read it from.
    let source: Vec<(bool, usize)> = out_vertices
        .iter()
        .map(|v| match left.vertices.iter().position(|x| x == v) {
            Some(p) => (true, p),
            None => (false, right.vertices.iter().position(|x| x == v).unwrap()),
        })
        .collect();
    let lrow = |i: usize| &left.rows[i * lw..(i + 1) * lw];
    let rrow = |j: usize| &right.rows[j * rw..(j + 1) * rw];
    let lk = |i: usize| lkey.iter().map(move |&p| lrow(i)[p]);
    let rk = |j: usize| rkey.iter().map(move |&p| rrow(j)[p]);
    let (ln, rn) = (left.len(), right.len());
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < ln && j < rn {
        match lk(i).cmp(rk(j)) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let mut i_end = i + 1;
                while i_end < ln && lk(i_end).eq(lk(i)) {
                    i_end += 1;
                }
                let mut j_end = j + 1;
                while j_end < rn && rk(j_end).eq(rk(j)) {
                    j_end += 1;
                }
                if out.len() / ow.max(1) + (i_end - i) * (j_end - j) > row_cap {
                    return Err(SolverError::RowCap {
                        step,
                        rows: out.len() / ow.max(1) + (i_end - i) * (j_end - j),
                        cap: row_cap,
                    });
                }
                for a in i..i_end {
                    for b in j..j_end {
                        let (ra, rb) = (lrow(a), rrow(b));
                        out.extend(source.iter().map(|&(from_left, p)| if from_left { ra[p] } else { rb[p] }));
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    Ok(InstanceList::new(h, out, ow))
}

/// Instance lists for every step of `s`, computed by sort-merge joins.
pub fn join_lists(x: &ColoredHostGraph, s: &UnionSequence, row_cap: usize) -> Result<Vec<InstanceList>, SolverError> {
    check_structure(s, x.pattern())?;
    let mut lists: Vec<InstanceList> = Vec::with_capacity(s.len());
    for (step, st) in s.steps().iter().enumerate() {
        let list = match st.provenance {
            Provenance::Edge(e) => edge_list(x, e),
            Provenance::Union(a, b) => {
                let (mut l, mut r) = (lists[a].clone(), lists[b].clone());
                merge_join(&mut l, &mut r, step, row_cap)?
            }
        };
        if list.len() > row_cap {
            return Err(SolverError::RowCap {
                step,
                rows: list.len(),
                cap: row_cap,
            });
        }
        lists.push(list);
    }
    Ok(lists)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinOutcome {
    pub decision: bool,
    pub counts: Vec<usize>,
    pub peak: usize,
}

pub fn join_solve(x: &ColoredHostGraph, s: &UnionSequence) -> Result<JoinOutcome, SolverError> {
    join_solve_with_cap(x, s, DEFAULT_ROW_CAP)
}

pub fn join_solve_with_cap(x: &ColoredHostGraph, s: &UnionSequence, row_cap: usize) -> Result<JoinOutcome, SolverError> {
    let lists = join_lists(x, s, row_cap)?;
    let counts: Vec<usize> = lists.iter().map(InstanceList::len).collect();
    Ok(JoinOutcome {
        decision: counts.last().is_some_and(|&c| c > 0),
        peak: counts.iter().copied().max().unwrap_or(0),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodnessRow {
    pub universe: Subgraph,
    pub base: Subgraph,
    pub vertex: usize,
    /// Largest number of `i` over all `A`-instances such that the instance
    /// plus `v_i` extends to `U`.
    pub count: u64,
    pub exponent: Rational,
    pub predicted: f64,
    pub ratio: f64,
}

/// Extension statistics for every `A ⊆ U ⊆ G` with `v(U) ≤ size_cap` and
/// every `v ∈ V(U) − V(A)`.
///
/// For a fixed `(U, A, v)` the maximum over `A`-instances is exact: an
/// instance plus `v_i` extends to `U` iff each connected component of `U`
/// extends, so only the component `C` containing `v` matters (the others
/// just have to be nonempty). The rows of `U[C]` are grouped by their
/// projection onto `V(A) ∩ C` and the distinct values of `v` are counted.
pub fn goodness_report(x: &ColoredHostGraph, size_cap: usize) -> Result<Vec<GoodnessRow>, SolverError> {
    goodness_report_with_cap(x, size_cap, DEFAULT_ROW_CAP)
}

pub fn goodness_report_with_cap(
    x: &ColoredHostGraph,
    size_cap: usize,
    row_cap: usize,
) -> Result<Vec<GoodnessRow>, SolverError> {
    let g = x.pattern();
    let w = x.weighting();
    let n = x.n() as f64;
    let universes = crate::graph::all_subgraphs(g, size_cap);
    let mut component_rows: BTreeMap<(u64, Vec<usize>), InstanceList> = BTreeMap::new();
    let mut out = Vec::new();
    for u in &universes {
        let components = components_of(g, u);
        let mut lists = Vec::with_capacity(components.len());
        for &c in &components {
            let part = restrict(g, u, c);
            let key = (c, part.edge_ids().collect::<Vec<_>>());
            if !component_rows.contains_key(&key) {
                let list = enumerate_rows(x, &part, row_cap)?;
                component_rows.insert(key.clone(), list);
            }
            lists.push(key);
        }
        let all_nonempty = lists.iter().all(|k| !component_rows[k].is_empty());
        for a in interval(g, &Subgraph::empty(g), u) {
            let base_star = delta_star(w, u, &a)?;
            for v in mask_vertices(u.vertices() & !a.vertices()) {
                let ci = components.iter().position(|&c| c >> v & 1 == 1).unwrap();
                let list = &component_rows[&lists[ci]];
                let count = if all_nonempty {
                    max_distinct_extensions(list, a.vertices() & components[ci], v)
                } else {
                    0
                };
                let exponent = delta_star(w, u, &a.with_vertex(v))? - &base_star;
                let predicted = n.powf(exponent.to_f64().unwrap_or(f64::NAN));
                out.push(GoodnessRow {
                    universe: u.clone(),
                    base: a.clone(),
                    vertex: v,
                    count,
                    ratio: count as f64 / predicted,
                    exponent,
                    predicted,
                });
            }
        }
    }
    Ok(out)
}

fn enumerate_rows(x: &ColoredHostGraph, h: &Subgraph, row_cap: usize) -> Result<InstanceList, SolverError> {
    let en = Enumerator::new(x, h);
    let width = h.vertex_count();
    let fixed = vec![None; width];
    let mut rows = Vec::new();
    let mut overflow = false;
    en.run(&fixed, &mut |r| {
        if rows.len() / width < row_cap {
            rows.extend_from_slice(r);
        } else {
            overflow = true;
        }
    });
    if overflow {
        return Err(SolverError::RowCap {
            step: 0,
            rows: row_cap + 1,
            cap: row_cap,
        });
    }
    Ok(InstanceList::new(h.clone(), rows, width))
}

fn components_of(g: &crate::graph::PatternGraph, u: &Subgraph) -> Vec<u64> {
    let mut left = u.vertices();
    let mut out = Vec::new();
    while left != 0 {
        let mut comp = 1u64 << left.trailing_zeros();
        loop {
            let grown = u
                .edge_ids()
                .map(|e| g.edge_mask(e))
                .filter(|m| m & comp != 0)
                .fold(comp, |c, m| c | m);
            if grown == comp {
                break;
            }
            comp = grown;
        }
        out.push(comp);
        left &= !comp;
    }
    out
}

fn restrict(g: &crate::graph::PatternGraph, u: &Subgraph, mask: u64) -> Subgraph {
    let edges = u.edge_ids().filter(|&e| g.edge_mask(e) & !mask == 0);
    Subgraph::new(g, mask, edges.collect::<Vec<_>>()).expect("component edges stay inside")
}

fn max_distinct_extensions(list: &InstanceList, a_mask: u64, v: usize) -> u64 {
    let key: Vec<usize> = list
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, &w)| a_mask >> w & 1 == 1)
        .map(|(p, _)| p)
        .collect();
    let vp = list.vertices().iter().position(|&w| w == v).unwrap();
    let mut groups: BTreeMap<Vec<u32>, std::collections::BTreeSet<u32>> = BTreeMap::new();
    for row in list.rows() {
        groups
            .entry(key.iter().map(|&p| row[p]).collect())
            .or_default()
            .insert(row[vp]);
    }
    groups.values().map(|s| s.len() as u64).max().unwrap_or(0)
}

/// Trie node: a block index, and children sorted by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub label: u32,
    pub children: Vec<Node>,
}

/// `Sub_H(X)` as a depth-`v(H)` tree: root-to-leaf label paths are the rows,
/// read in the vertex order `order`.
///
/// A node at depth `i` may have at most `capacities[i]` children, where
/// `capacities[i] = ceil(n^{φ_i} (log₂ n)^a)`. Children are stored packed
/// and sorted; exceeding a capacity is reported as an overflow rather than
/// silently dropping rows.
#[derive(Debug, Clone)]
pub struct SubgraphTrie {
    pattern: Subgraph,
    order: Vec<usize>,
    delta: Vec<Rational>,
    phi: Vec<Rational>,
    capacities: Vec<usize>,
    exponent: f64,
    n: u64,
    root: Vec<Node>,
}

impl SubgraphTrie {
    pub fn pattern(&self) -> &Subgraph {
        &self.pattern
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn delta(&self) -> &[Rational] {
        &self.delta
    }

    pub fn phi(&self) -> &[Rational] {
        &self.phi
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn depth(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_empty()
    }

    /// Number of non-root nodes.
    pub fn size(&self) -> usize {
        fn count(nodes: &[Node]) -> usize {
            nodes.iter().map(|n| 1 + count(&n.children)).sum()
        }
        count(&self.root)
    }

    /// Represented rows, each listed in `order`.
    pub fn paths(&self) -> Vec<Vec<u32>> {
        fn walk(nodes: &[Node], depth: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            for n in nodes {
                prefix.push(n.label);
                if depth == 1 {
                    out.push(prefix.clone());
                } else {
                    walk(&n.children, depth - 1, prefix, out);
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if self.depth() > 0 {
            walk(&self.root, self.depth(), &mut Vec::new(), &mut out);
        }
        out
    }

    /// Represented rows rearranged into increasing vertex order, sorted.
    pub fn rows(&self) -> Vec<Vec<u32>> {
        let mut perm: Vec<usize> = (0..self.order.len()).collect();
        perm.sort_by_key(|&p| self.order[p]);
        let mut out: Vec<Vec<u32>> = self
            .paths()
            .into_iter()
            .map(|p| perm.iter().map(|&i| p[i]).collect())
            .collect();
        out.sort_unstable();
        out
    }

    fn check_capacities(&self) -> Result<(), SolverError> {
        fn rec(nodes: &[Node], level: usize, caps: &[usize]) -> Result<(), SolverError> {
            if nodes.len() > caps[level] {
                return Err(SolverError::TrieOverflow {
                    level,
                    count: nodes.len(),
                    capacity: caps[level],
                });
            }
            if level + 1 < caps.len() {
                for n in nodes {
                    rec(&n.children, level + 1, caps)?;
                }
            }
            Ok(())
        }
        if self.capacities.is_empty() {
            return Ok(());
        }
        rec(&self.root, 0, &self.capacities)
    }
}

/// `δ_i = Δ*_H({π¹ … πⁱ})`, `φ_i = δ_{i+1} − δ_i`, and the capacities.
fn trie_shape(
    x: &ColoredHostGraph,
    h: &Subgraph,
    order: &[usize],
    exponent: f64,
) -> Result<(Vec<Rational>, Vec<Rational>, Vec<usize>), SolverError> {
    let g = x.pattern();
    let w = x.weighting();
    let mut delta = Vec::with_capacity(order.len() + 1);
    let mut mask = 0u64;
    delta.push(delta_star(w, h, &Subgraph::vertex_only(g, 0))?);
    for &u in order {
        mask |= 1 << u;
        delta.push(delta_star(w, h, &Subgraph::vertex_only(g, mask))?);
    }
    let phi: Vec<Rational> = delta.windows(2).map(|d| &d[1] - &d[0]).collect();
    let zero = Rational::from_integer(0.into());
    let one = Rational::from_integer(1.into());
    if phi.iter().any(|p| p < &zero || p > &one) {
        return Err(SolverError::Internal("φ outside [0, 1]".into()));
    }
    if delta[order.len()] != w.delta(h) {
        return Err(SolverError::Internal("Σφ differs from Δ(H)".into()));
    }
    let n = x.n() as f64;
    let polylog = n.log2().powf(exponent);
    let capacities = phi
        .iter()
        .map(|p| (n.powf(p.to_f64().unwrap()) * polylog - 1e-9).ceil().max(1.0) as usize)
        .collect();
    Ok((delta, phi, capacities))
}

fn check_order(h: &Subgraph, order: &[usize]) -> Result<(), SolverError> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != h.vertex_list() {
        return Err(SolverError::BadOrder(format!("{order:?} is not an ordering of V(H)")));
    }
    Ok(())
}

/// Two-level trie of one pattern edge in the order `order`.
pub fn trie_build(
    x: &ColoredHostGraph,
    e: usize,
    order: [usize; 2],
    exponent: f64,
) -> Result<SubgraphTrie, SolverError> {
    let g = x.pattern();
    let h = Subgraph::single_edge(g, e);
    check_order(&h, &order)?;
    let blocks = x.block_edges(e);
    let first = order[0];
    let root: Vec<Node> = (0..x.block_size(first) as u32)
        .filter_map(|i| {
            let partners = blocks.partners(first, i);
            (!partners.is_empty()).then(|| Node {
                label: i,
                children: partners
                    .iter()
                    .map(|&j| Node {
                        label: j,
                        children: Vec::new(),
                    })
                    .collect(),
            })
        })
        .collect();
    let (delta, phi, capacities) = trie_shape(x, &h, &order, exponent)?;
    let t = SubgraphTrie {
        pattern: h,
        order: order.to_vec(),
        delta,
        phi,
        capacities,
        exponent,
        n: x.n(),
        root,
    };
    t.check_capacities()?;
    Ok(t)
}

/// Regroup the depth-`d` subtrees under each depth-`d−1` node so that
/// levels `d` and `d+1` trade places (0-based levels of labels).
fn swap_levels(nodes: Vec<Node>, d: usize) -> Vec<Node> {
    if d > 0 {
        return nodes
            .into_iter()
            .map(|n| Node {
                label: n.label,
                children: swap_levels(n.children, d - 1),
            })
            .collect();
    }
    let mut grouped: BTreeMap<u32, Vec<Node>> = BTreeMap::new();
    for sigma in nodes {
        for tau in sigma.children {
            grouped.entry(tau.label).or_default().push(Node {
                label: sigma.label,
                children: tau.children,
            });
        }
    }
    grouped
        .into_iter()
        .map(|(label, mut children)| {
            children.sort_by_key(|c| c.label);
            Node { label, children }
        })
        .collect()
}

/// Rebuild `t` for the vertex order `target` by adjacent transpositions.
pub fn trie_reorder(
    x: &ColoredHostGraph,
    t: &SubgraphTrie,
    target: &[usize],
) -> Result<SubgraphTrie, SolverError> {
    check_order(&t.pattern, target)?;
    let mut cur = t.clone();
    loop {
        let Some(d) = (0..cur.order.len().saturating_sub(1)).find(|&d| {
            let pos = |v| target.iter().position(|&w| w == v).unwrap();
            pos(cur.order[d]) > pos(cur.order[d + 1])
        }) else {
            break;
        };
        let mut order = cur.order.clone();
        order.swap(d, d + 1);
        let (delta, phi, capacities) = trie_shape(x, &cur.pattern, &order, cur.exponent)?;
        if &cur.phi[d] + &cur.phi[d + 1] != &phi[d] + &phi[d + 1] {
            return Err(SolverError::Internal("adjacent swap changed φ_d + φ_{d+1}".into()));
        }
        let next = SubgraphTrie {
            root: swap_levels(std::mem::take(&mut cur.root), d),
            order,
            delta,
            phi,
            capacities,
            ..cur
        };
        next.check_capacities()?;
        cur = next;
    }
    Ok(cur)
}

/// Append a copy of `tail` below every depth-`levels` descendant.
fn append_below(nodes: &[Node], levels: usize, tail: &[Node]) -> Vec<Node> {
    if levels == 0 {
        return tail.to_vec();
    }
    nodes
        .iter()
        .map(|n| Node {
            label: n.label,
            children: append_below(&n.children, levels - 1, tail),
        })
        .collect()
}

/// Intersect on the first `shared` levels, dropping nodes left without
/// children; then attach the suffix of `right` under each suffix leaf of
/// `left`.
fn merge_nodes(left: &[Node], right: &[Node], shared: usize, left_tail: usize) -> Vec<Node> {
    if shared == 0 {
        return append_below(left, left_tail, right);
    }
    let mut out = Vec::new();
    for tau in left {
        let Ok(k) = right.binary_search_by_key(&tau.label, |r| r.label) else {
            continue;
        };
        let rho = &right[k];
        let children = merge_nodes(&tau.children, &rho.children, shared - 1, left_tail);
        let leaf_level = shared == 1 && left_tail == 0 && rho.children.is_empty();
        if !children.is_empty() || leaf_level {
            out.push(Node {
                label: tau.label,
                children,
            });
        }
    }
    out
}

/// Merge `T(H, π)` and `T(H′, π′)` into `T(H ∪ H′, π̂)` where `π̂` is `π`
/// followed by the part of `π′` outside `V(H)`. Both orders must start with
/// the common vertices in the same sequence.
pub fn trie_merge(
    x: &ColoredHostGraph,
    left: &SubgraphTrie,
    right: &SubgraphTrie,
) -> Result<SubgraphTrie, SolverError> {
    let shared_mask = left.pattern.vertices() & right.pattern.vertices();
    let s = shared_mask.count_ones() as usize;
    if left.order[..s] != right.order[..s]
        || left.order[..s].iter().any(|&v| shared_mask >> v & 1 == 0)
    {
        return Err(SolverError::IncompatiblePrefix);
    }
    let h = left.pattern.union(&right.pattern);
    let mut order = left.order.clone();
    order.extend_from_slice(&right.order[s..]);
    let (delta, phi, capacities) = trie_shape(x, &h, &order, left.exponent)?;
    let lv = left.order.len();
    if phi[s..lv] != left.phi[s..] || phi[lv..] != right.phi[s..] {
        return Err(SolverError::Internal("merged φ differs on the suffix levels".into()));
    }
    let root = merge_nodes(&left.root, &right.root, s, lv - s);
    let t = SubgraphTrie {
        pattern: h,
        order,
        delta,
        phi,
        capacities,
        exponent: left.exponent,
        n: left.n,
        root,
    };
    t.check_capacities()?;
    Ok(t)
}

/// Reorder so that `first` comes first (ascending), keeping the rest in
/// their current relative order.
fn shared_first(t: &SubgraphTrie, first: u64) -> Vec<usize> {
    let mut order: Vec<usize> = mask_vertices(first).collect();
    order.extend(t.order.iter().copied().filter(|&v| first >> v & 1 == 0));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrieOutcome {
    pub decision: bool,
    pub overflow: Option<SolverError>,
    /// Node counts per step, up to the overflowing step.
    pub sizes: Vec<usize>,
    /// Decision from the join solver after an overflow, when requested.
    pub fallback: Option<bool>,
}

/// The trie of every step of `s`, or the first overflow together with the
/// tries built before it.
pub fn trie_steps(
    x: &ColoredHostGraph,
    s: &UnionSequence,
    exponent: f64,
) -> Result<(Vec<SubgraphTrie>, Option<SolverError>), SolverError> {
    check_structure(s, x.pattern())?;
    let g = x.pattern();
    let mut tries: Vec<SubgraphTrie> = Vec::with_capacity(s.len());
    for st in s.steps() {
        let built = match st.provenance {
            Provenance::Edge(e) => {
                let (u, v) = g.edge(e);
                trie_build(x, e, [u, v], exponent)
            }
            Provenance::Union(a, b) => {
                let shared = tries[a].pattern.vertices() & tries[b].pattern.vertices();
                trie_reorder(x, &tries[a], &shared_first(&tries[a], shared)).and_then(|l| {
                    let r = trie_reorder(x, &tries[b], &shared_first(&tries[b], shared))?;
                    trie_merge(x, &l, &r)
                })
            }
        };
        match built {
            Ok(t) => tries.push(t),
            Err(e @ SolverError::TrieOverflow { .. }) => return Ok((tries, Some(e))),
            Err(e) => return Err(e),
        }
    }
    Ok((tries, None))
}

pub fn trie_solve(
    x: &ColoredHostGraph,
    s: &UnionSequence,
    exponent: f64,
    fallback: bool,
) -> Result<TrieOutcome, SolverError> {
    let (tries, overflow) = trie_steps(x, s, exponent)?;
    let sizes = tries.iter().map(SubgraphTrie::size).collect();
    if overflow.is_some() {
        let fallback = if fallback { Some(join_solve(x, s)?.decision) } else { None };
        return Ok(TrieOutcome {
            decision: fallback.unwrap_or(false),
            overflow,
            sizes,
            fallback,
        });
    }
    Ok(TrieOutcome {
        decision: !tries.last().expect("nonempty").is_empty(),
        overflow: None,
        sizes,
        fallback: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PatternGraph;
    use crate::kappa::{kappa_exact, SequenceBuilder};
    use crate::randgraph::sample;
    use crate::rational::int;
    use crate::threshold::{uniform_walk, ThresholdWeighting};
    use std::sync::Arc;

    fn k3_walk() -> Arc<ThresholdWeighting> {
        Arc::new(uniform_walk(Arc::new(PatternGraph::complete(3).unwrap())).unwrap())
    }

    fn k3_sequence(g: &PatternGraph) -> UnionSequence {
        let mut b = SequenceBuilder::new(g);
        let e0 = b.push_edge(0);
        let e1 = b.push_edge(1);
        let u = b.push_union(e0, e1);
        let e2 = b.push_edge(2);
        b.push_union(u, e2);
        b.finish()
    }

    #[test]
    fn brute_force_single_edge_is_stored_pairs() {
        let x = sample(k3_walk(), 60, 4).unwrap();
        let g = x.pattern().clone();
        let list = brute_force(&x, &Subgraph::single_edge(&g, 1)).unwrap();
        let (u, v) = g.edge(1);
        let mut expect: Vec<Vec<u32>> = x
            .block_edges(1)
            .pairs()
            .iter()
            .map(|&(i, j)| if u < v { vec![i, j] } else { vec![j, i] })
            .collect();
        expect.sort();
        assert_eq!(list.rows().map(<[u32]>::to_vec).collect::<Vec<_>>(), expect);
    }

    #[test]
    fn complete_blocks_give_full_product() {
        let g = Arc::new(PatternGraph::path(3).unwrap());
        let w = Arc::new(ThresholdWeighting::new(g.clone(), vec![int(0), int(1), int(0)], vec![int(1), int(0)]).unwrap());
        let x = ColoredHostGraph::from_parts(w, 5, 0, vec![2, 3, 2], vec![
            (0..2).flat_map(|i| (0..3).map(move |j| (i, j))).collect(),
            (0..3).flat_map(|i| (0..2).map(move |j| (i, j))).collect(),
        ])
        .unwrap();
        assert_eq!(brute_force(&x, &Subgraph::full(&g)).unwrap().len(), 12);
    }

    #[test]
    fn join_matches_brute_force_on_k3() {
        for seed in 0..10 {
            let x = sample(k3_walk(), 40, seed).unwrap();
            let g = x.pattern().clone();
            let s = k3_sequence(&g);
            let lists = join_lists(&x, &s, DEFAULT_ROW_CAP).unwrap();
            for (list, st) in lists.iter().zip(s.steps()) {
                assert_eq!(list, &brute_force(&x, &st.graph).unwrap());
            }
        }
    }

    #[test]
    fn empty_block_pair_decides_false() {
        let w = k3_walk();
        let x = ColoredHostGraph::from_parts(w, 4, 0, vec![4, 4, 4], vec![
            vec![(0, 0), (1, 1)],
            vec![],
            vec![(0, 0)],
        ])
        .unwrap();
        let g = x.pattern().clone();
        let out = join_solve(&x, &k3_sequence(&g)).unwrap();
        assert!(!out.decision);
        assert_eq!(*out.counts.last().unwrap(), 0);
        let t = trie_solve(&x, &k3_sequence(&g), 2.0, false).unwrap();
        assert!(!t.decision);
    }

    #[test]
    fn count_copies_matches_brute_force() {
        let x = sample(k3_walk(), 30, 5).unwrap();
        let g = x.pattern().clone();
        for h in crate::graph::all_subgraphs(&g, 3) {
            assert_eq!(count_copies(&x, &h).unwrap(), brute_force(&x, &h).unwrap().len() as u128, "{}", h.describe());
        }
    }

    #[test]
    fn count_extensions_examples() {
        let x = sample(k3_walk(), 50, 7).unwrap();
        let g = x.pattern().clone();
        let e = Subgraph::single_edge(&g, 0);
        let total = count_extensions(&x, &[], &Subgraph::empty(&g), &e).unwrap();
        assert_eq!(total as usize, x.block_edges(0).len());
        let &(i, j) = x.block_edges(0).pairs().first().unwrap();
        assert_eq!(count_extensions(&x, &[i, j], &e, &e).unwrap(), 1);
        let missing = (0..50).find(|&j| !x.block_edges(0).contains(0, j)).unwrap();
        assert_eq!(count_extensions(&x, &[0, missing], &e, &e).unwrap(), 0);
    }

    #[test]
    fn trie_edge_and_reorder() {
        let x = sample(k3_walk(), 80, 2).unwrap();
        let g = x.pattern().clone();
        let (u, v) = g.edge(0);
        let t = trie_build(&x, 0, [u, v], 2.0).unwrap();
        let brute = brute_force(&x, &Subgraph::single_edge(&g, 0)).unwrap();
        assert_eq!(t.rows(), brute.rows().map(<[u32]>::to_vec).collect::<Vec<_>>());
        let sum: Rational = t.phi().iter().sum();
        assert_eq!(sum, int(1));
        let r = trie_reorder(&x, &t, &[v, u]).unwrap();
        assert_eq!(r.rows(), t.rows());
        assert_eq!(r.order(), &[v, u]);
        let same = trie_reorder(&x, &t, &[u, v]).unwrap();
        assert_eq!(same.paths(), t.paths());
    }

    #[test]
    fn trie_capacity_overflow_is_reported() {
        let g = Arc::new(PatternGraph::complete(2).unwrap());
        let w = Arc::new(ThresholdWeighting::new(g.clone(), vec![int(1), int(1)], vec![int(2)]).unwrap());
        let full: Vec<(u32, u32)> = (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).collect();
        let x = ColoredHostGraph::from_parts(w, 8, 0, vec![8, 8], vec![full]).unwrap();
        // φ = (0, 0) and (log₂ 8)^1 = 3 < 8.
        let err = trie_build(&x, 0, [0, 1], 1.0).unwrap_err();
        assert_eq!(err, SolverError::TrieOverflow { level: 0, count: 8, capacity: 3 });
    }

    #[test]
    fn trie_solve_matches_join() {
        for seed in 0..10 {
            let x = sample(k3_walk(), 100, seed).unwrap();
            let r = kappa_exact(x.weighting()).unwrap();
            let t = trie_solve(&x, &r.witness, 2.0, false).unwrap();
            assert!(t.overflow.is_none());
            assert_eq!(t.decision, join_solve(&x, &r.witness).unwrap().decision);
        }
    }

    #[test]
    fn merge_examples() {
        let x = sample(k3_walk(), 60, 11).unwrap();
        let g = x.pattern().clone();
        let t01 = trie_build(&x, 0, [0, 1], 2.0).unwrap();
        let same = trie_merge(&x, &t01, &t01).unwrap();
        assert_eq!(same.rows(), t01.rows());
        let path = Arc::new(PatternGraph::build(4, &[(0, 1), (2, 3)]).unwrap());
        let w = Arc::new(ThresholdWeighting::new(path.clone(), vec![int(1); 4], vec![int(2), int(2)]).unwrap());
        let y = ColoredHostGraph::from_parts(w, 3, 0, vec![3; 4], vec![vec![(0, 1), (2, 2)], vec![(1, 0)]]).unwrap();
        let a = trie_build(&y, 0, [0, 1], 2.0).unwrap();
        let b = trie_build(&y, 1, [2, 3], 2.0).unwrap();
        let m = trie_merge(&y, &a, &b).unwrap();
        assert_eq!(m.rows(), vec![vec![0, 1, 1, 0], vec![2, 2, 1, 0]]);
        assert!(trie_merge(&x, &t01, &trie_build(&x, 1, [g.edge(1).1, g.edge(1).0], 2.0).unwrap()).is_err()
            || g.edge(1).1 == 0);
    }

    #[test]
    fn goodness_report_shape() {
        let x = sample(k3_walk(), 200, 1).unwrap();
        let rows = goodness_report(&x, 3).unwrap();
        assert!(!rows.is_empty());
        let n = 200f64;
        assert!(rows.iter().all(|r| r.ratio <= n.log2().powi(3)));
        let g = x.pattern().clone();
        let full = Subgraph::full(&g);
        let missing = Subgraph::induced(&g, 0b011);
        let row = rows
            .iter()
            .find(|r| r.universe == full && r.base == missing && r.vertex == 2)
            .unwrap();
        let w = x.weighting();
        let expect = delta_star(w, &full, &missing.with_vertex(2)).unwrap() - delta_star(w, &full, &missing).unwrap();
        assert_eq!(row.exponent, expect);
        assert!(row.ratio.is_finite());
    }
}
