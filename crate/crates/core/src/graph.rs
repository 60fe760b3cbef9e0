//! Pattern graphs, the subgraph lattice, and the graph families used by the
//! constructions: Hamming graphs, blowups and the hypercube embedding.
//!
//! Vertex sets are `u64` bitmasks, so a [`PatternGraph`] holds at most
//! [`MAX_VERTEX_CAP`] vertices. Edge sets are [`FixedBitSet`]s indexed by the
//! parent's edge order, which is fixed at construction.

use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use fixedbitset::FixedBitSet;
use thiserror::Error;

/// Default bound on the number of pattern vertices.
pub const DEFAULT_VERTEX_CAP: usize = 32;
/// Hard bound imposed by the `u64` vertex bitsets.
pub const MAX_VERTEX_CAP: usize = 64;

const NO_EDGE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({u}, {v}) references a vertex outside 0..{vertex_count}")]
    VertexOutOfRange {
        u: usize,
        v: usize,
        vertex_count: usize,
    },
    #[error("graph would have {requested} vertices, above the cap of {cap}")]
    TooManyVertices { requested: usize, cap: usize },
    #[error("subgraphs belong to different parent graphs")]
    ParentMismatch,
    #[error("edge set of a subgraph has an endpoint outside its vertex set (edge {0})")]
    DanglingEdge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hamming embedding requires even q, got {0}")]
    OddQ(usize),
    #[error("embedding check failed: {0}")]
    EmbeddingCheck(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Iterate the set bits of a vertex mask in increasing order.
pub fn mask_vertices(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(v)
        }
    })
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A simple undirected graph with stable edge indices.
#[derive(Debug, Clone)]
pub struct PatternGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u64>,
    edge_ids: Vec<u32>,
    fingerprint: u64,
}

impl PartialEq for PatternGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count == other.vertex_count && self.edges == other.edges
    }
}

impl Eq for PatternGraph {}

impl PatternGraph {
    /// Build a graph whose edge `i` is `edge_list[i]`, with the default cap.
    pub fn build(vertex_count: usize, edge_list: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::build_with_cap(vertex_count, edge_list, DEFAULT_VERTEX_CAP)
    }

    pub fn build_with_cap(
        vertex_count: usize,
        edge_list: &[(usize, usize)],
        cap: usize,
    ) -> Result<Self, GraphError> {
        let cap = cap.min(MAX_VERTEX_CAP);
        if vertex_count > cap {
            return Err(GraphError::TooManyVertices {
                requested: vertex_count,
                cap,
            });
        }
        let mut adjacency = vec![0u64; vertex_count];
        let mut edge_ids = vec![NO_EDGE; vertex_count * vertex_count];
        let mut edges = Vec::with_capacity(edge_list.len());
        for (idx, &(u, v)) in edge_list.iter().enumerate() {
            if u >= vertex_count || v >= vertex_count {
                return Err(GraphError::VertexOutOfRange { u, v, vertex_count });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if adjacency[u] >> v & 1 == 1 {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            adjacency[u] |= 1 << v;
            adjacency[v] |= 1 << u;
            edge_ids[u * vertex_count + v] = idx as u32;
            edge_ids[v * vertex_count + u] = idx as u32;
            edges.push((u, v));
        }
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        vertex_count.hash(&mut hasher);
        edges.hash(&mut hasher);
        Ok(Self {
            vertex_count,
            edges,
            adjacency,
            edge_ids,
            fingerprint: hasher.finish(),
        })
    }

    /// The complete graph `K_k`.
    pub fn complete(k: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for u in 0..k {
            for v in u + 1..k {
                edges.push((u, v));
            }
        }
        Self::build(k, &edges)
    }

    /// The path `0 - 1 - ... - (k-1)`.
    pub fn path(k: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..k).map(|v| (v - 1, v)).collect();
        Self::build(k, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> (usize, usize) {
        self.edges[idx]
    }

    /// Bitmask of the endpoints of edge `idx`.
    pub fn edge_mask(&self, idx: usize) -> u64 {
        let (u, v) = self.edges[idx];
        (1 << u) | (1 << v)
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.vertex_count || v >= self.vertex_count {
            return None;
        }
        match self.edge_ids[u * self.vertex_count + v] {
            NO_EDGE => None,
            id => Some(id as usize),
        }
    }

    pub fn neighbors(&self, u: usize) -> u64 {
        self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].count_ones() as usize
    }

    pub fn all_vertices(&self) -> u64 {
        full_mask(self.vertex_count)
    }

    pub fn has_isolated_vertices(&self) -> bool {
        self.adjacency.contains(&0)
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.vertex_count * self.vertex_count.saturating_sub(1) / 2
    }

    /// Edges of the induced subgraph on `mask`.
    pub fn induced_edges(&self, mask: u64) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.edges.len());
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if mask >> u & 1 == 1 && mask >> v & 1 == 1 {
                set.insert(i);
            }
        }
        set
    }

    /// Identity token shared by every subgraph of this graph.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Serialize in the `p <v> <e>` / `e <u> <v>` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("p {} {}\n", self.vertex_count, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "e {u} {v}");
        }
        out
    }

    /// Parse the text format. Blank lines and lines starting with `c` are
    /// comments; anything else after the declared edges is rejected.
    pub fn parse_text(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('c') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_err = |message: &str| GraphError::Parse {
                line,
                message: message.to_string(),
            };
            let num = |s: &str| -> Result<usize, GraphError> {
                s.parse::<usize>()
                    .map_err(|_| parse_err(&format!("expected integer, got {s:?}")))
            };
            match (header, fields.as_slice()) {
                (None, ["p", v, e]) => header = Some((num(v)?, num(e)?)),
                (None, _) => return Err(parse_err("expected header `p <v> <e>`")),
                (Some((_, e)), ["e", u, v]) if edges.len() < e => edges.push((num(u)?, num(v)?)),
                (Some(_), ["e", ..]) => return Err(parse_err("more edges than declared")),
                (Some(_), _) => return Err(parse_err(&format!("unexpected line {trimmed:?}"))),
            }
        }
        let (v, e) = header.ok_or(GraphError::Parse {
            line: 0,
            message: "missing header".into(),
        })?;
        if edges.len() != e {
            return Err(GraphError::Parse {
                line: 0,
                message: format!("declared {e} edges, found {}", edges.len()),
            });
        }
        Self::build_with_cap(v, &edges, MAX_VERTEX_CAP)
    }
}

/// A vertex set plus an edge set inside a parent [`PatternGraph`].
///
/// Isolated vertices are allowed; the empty subgraph is representable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subgraph {
    parent: u64,
    vertices: u64,
    edges: FixedBitSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Union,
    Intersection,
}

impl Subgraph {
    pub fn empty(g: &PatternGraph) -> Self {
        Self {
            parent: g.fingerprint,
            vertices: 0,
            edges: FixedBitSet::with_capacity(g.edge_count()),
        }
    }

    pub fn full(g: &PatternGraph) -> Self {
        let mut edges = FixedBitSet::with_capacity(g.edge_count());
        edges.insert_range(..);
        Self {
            parent: g.fingerprint,
            vertices: g.all_vertices(),
            edges,
        }
    }

    /// Vertices only, no edges.
    pub fn vertex_only(g: &PatternGraph, mask: u64) -> Self {
        Self {
            parent: g.fingerprint,
            vertices: mask & g.all_vertices(),
            edges: FixedBitSet::with_capacity(g.edge_count()),
        }
    }

    pub fn induced(g: &PatternGraph, mask: u64) -> Self {
        let mask = mask & g.all_vertices();
        Self {
            parent: g.fingerprint,
            vertices: mask,
            edges: g.induced_edges(mask),
        }
    }

    pub fn single_edge(g: &PatternGraph, idx: usize) -> Self {
        let mut edges = FixedBitSet::with_capacity(g.edge_count());
        edges.insert(idx);
        Self {
            parent: g.fingerprint,
            vertices: g.edge_mask(idx),
            edges,
        }
    }

    /// The union of the given edges; vertex set is their endpoints.
    pub fn from_edges(g: &PatternGraph, edge_ids: impl IntoIterator<Item = usize>) -> Self {
        let mut edges = FixedBitSet::with_capacity(g.edge_count());
        let mut vertices = 0;
        for idx in edge_ids {
            edges.insert(idx);
            vertices |= g.edge_mask(idx);
        }
        Self {
            parent: g.fingerprint,
            vertices,
            edges,
        }
    }

    /// Build from an explicit vertex mask and edge list, checking endpoints.
    pub fn new(
        g: &PatternGraph,
        vertices: u64,
        edge_ids: impl IntoIterator<Item = usize>,
    ) -> Result<Self, GraphError> {
        if vertices & !g.all_vertices() != 0 {
            return Err(GraphError::InvalidParameter(format!(
                "vertex mask {vertices:#x} exceeds the graph"
            )));
        }
        let mut edges = FixedBitSet::with_capacity(g.edge_count());
        for idx in edge_ids {
            if idx >= g.edge_count() {
                return Err(GraphError::InvalidParameter(format!("no edge {idx}")));
            }
            if g.edge_mask(idx) & !vertices != 0 {
                return Err(GraphError::DanglingEdge(idx));
            }
            edges.insert(idx);
        }
        Ok(Self {
            parent: g.fingerprint,
            vertices,
            edges,
        })
    }

    /// The subgraph of `g` whose edge bitmask is `edge_mask` (for graphs with
    /// at most 64 edges); vertex set is the endpoints.
    pub fn from_edge_mask(g: &PatternGraph, edge_mask: u64) -> Self {
        Self::from_edges(g, mask_vertices(edge_mask))
    }

    pub fn belongs_to(&self, g: &PatternGraph) -> bool {
        self.parent == g.fingerprint
    }

    pub fn vertices(&self) -> u64 {
        self.vertices
    }

    pub fn vertex_list(&self) -> Vec<usize> {
        mask_vertices(self.vertices).collect()
    }

    pub fn edge_set(&self) -> &FixedBitSet {
        &self.edges
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.ones()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.edges.count_ones(..)
    }

    pub fn has_vertex(&self, v: usize) -> bool {
        v < 64 && self.vertices >> v & 1 == 1
    }

    pub fn has_edge(&self, idx: usize) -> bool {
        self.edges.contains(idx)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices == 0
    }

    /// Edge bitmask as a `u64`; only meaningful for parents with ≤ 64 edges.
    pub fn edge_mask(&self) -> u64 {
        self.edges.ones().fold(0u64, |m, i| m | 1 << i)
    }

    pub fn is_subgraph_of(&self, other: &Self) -> bool {
        self.parent == other.parent
            && self.vertices & !other.vertices == 0
            && self.edges.is_subset(&other.edges)
    }

    /// Bitwise union or intersection of vertex and edge sets.
    pub fn combine(&self, other: &Self, mode: CombineMode) -> Result<Self, GraphError> {
        if self.parent != other.parent {
            return Err(GraphError::ParentMismatch);
        }
        let mut edges = self.edges.clone();
        let vertices = match mode {
            CombineMode::Union => {
                edges.union_with(&other.edges);
                self.vertices | other.vertices
            }
            CombineMode::Intersection => {
                edges.intersect_with(&other.edges);
                self.vertices & other.vertices
            }
        };
        Ok(Self {
            parent: self.parent,
            vertices,
            edges,
        })
    }

    /// Union; panics on mismatched parents.
    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, CombineMode::Union)
            .expect("union of subgraphs from different graphs")
    }

    /// Intersection; panics on mismatched parents.
    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, CombineMode::Intersection)
            .expect("intersection of subgraphs from different graphs")
    }

    /// Add a vertex (no edges).
    pub fn with_vertex(&self, v: usize) -> Self {
        let mut out = self.clone();
        out.vertices |= 1 << v;
        out
    }

    /// Short human-readable form, e.g. `V{0,1} E{0}`.
    pub fn describe(&self) -> String {
        let vs: Vec<String> = self.vertex_list().iter().map(|v| v.to_string()).collect();
        let es: Vec<String> = self.edge_ids().map(|e| e.to_string()).collect();
        format!("V{{{}}} E{{{}}}", vs.join(","), es.join(","))
    }
}

/// Free-function form of [`Subgraph::combine`].
pub fn combine(a: &Subgraph, b: &Subgraph, mode: CombineMode) -> Result<Subgraph, GraphError> {
    a.combine(b, mode)
}

/// Every subgraph of `g` (all vertex sets, all edge sets inside them) whose
/// vertex count is at most `max_vertices`.
pub fn all_subgraphs(g: &PatternGraph, max_vertices: usize) -> Vec<Subgraph> {
    let mut out = Vec::new();
    for mask in 0..=g.all_vertices() {
        if mask.count_ones() as usize > max_vertices {
            continue;
        }
        let inside: Vec<usize> = g.induced_edges(mask).ones().collect();
        for sub in 0u64..(1u64 << inside.len()) {
            let edges = mask_vertices(sub).map(|i| inside[i]);
            out.push(Subgraph::new(g, mask, edges).expect("edges lie inside the mask"));
        }
        if mask == g.all_vertices() {
            break;
        }
    }
    out
}

/// Every subgraph `H` with `lower ⊆ H ⊆ upper`.
pub fn interval(g: &PatternGraph, lower: &Subgraph, upper: &Subgraph) -> Vec<Subgraph> {
    let free_vertices: Vec<usize> = mask_vertices(upper.vertices() & !lower.vertices()).collect();
    let mut out = Vec::new();
    for pick in 0u64..(1u64 << free_vertices.len()) {
        let mask = mask_vertices(pick).fold(lower.vertices(), |m, i| m | 1 << free_vertices[i]);
        let optional: Vec<usize> = upper
            .edge_ids()
            .filter(|&e| !lower.has_edge(e) && g.edge_mask(e) & !mask == 0)
            .collect();
        for sub in 0u64..(1u64 << optional.len()) {
            let edges = lower
                .edge_ids()
                .chain(mask_vertices(sub).map(|i| optional[i]));
            out.push(Subgraph::new(g, mask, edges).expect("edges lie inside the mask"));
        }
    }
    out
}

/// Index of a Hamming-graph vertex: `Σ x_i q^i`.
pub fn hamming_index(q: usize, coords: &[usize]) -> usize {
    coords.iter().rev().fold(0, |acc, &x| acc * q + x)
}

/// Coordinates of a Hamming-graph vertex index.
pub fn hamming_coords(q: usize, d: usize, mut index: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(d);
    for _ in 0..d {
        out.push(index % q);
        index /= q;
    }
    out
}

/// The Hamming graph `K_q^d`: vertices `[q]^d`, adjacent iff they differ in
/// exactly one coordinate. Vertex `x` has index `Σ x_i q^i`, so for `q = 2`
/// bit `i` of the index is coordinate `i`.
pub fn hamming(q: usize, d: usize) -> Result<PatternGraph, GraphError> {
    hamming_with_cap(q, d, DEFAULT_VERTEX_CAP)
}

pub fn hamming_with_cap(q: usize, d: usize, cap: usize) -> Result<PatternGraph, GraphError> {
    if q < 2 || d < 1 {
        return Err(GraphError::InvalidParameter(format!(
            "hamming graph needs q >= 2 and d >= 1, got q={q}, d={d}"
        )));
    }
    let size = q
        .checked_pow(d as u32)
        .filter(|&s| s <= cap.min(MAX_VERTEX_CAP))
        .ok_or(GraphError::TooManyVertices {
            requested: q.saturating_pow(d as u32),
            cap: cap.min(MAX_VERTEX_CAP),
        })?;
    let mut edges = Vec::new();
    let mut stride = 1;
    let mut strides = Vec::with_capacity(d);
    for _ in 0..d {
        strides.push(stride);
        stride *= q;
    }
    for u in 0..size {
        let coords = hamming_coords(q, d, u);
        for (i, &x) in coords.iter().enumerate() {
            for y in x + 1..q {
                edges.push((u, u + (y - x) * strides[i]));
            }
        }
    }
    edges.sort_unstable();
    PatternGraph::build_with_cap(size, &edges, cap)
}

/// The hypercube `Q_d = K_2^d`.
pub fn hypercube(d: usize) -> Result<PatternGraph, GraphError> {
    hamming(2, d)
}

/// `G↑q`: each vertex replaced by a `q`-clique, copies of adjacent vertices
/// fully joined. Copy `i` of source vertex `u` is result vertex `u*q + i`.
#[derive(Debug, Clone)]
pub struct BlowupMap {
    source: PatternGraph,
    q: usize,
    result: PatternGraph,
}

impl BlowupMap {
    pub fn source(&self) -> &PatternGraph {
        &self.source
    }

    pub fn result(&self) -> &PatternGraph {
        &self.result
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn copy(&self, u: usize, i: usize) -> usize {
        u * self.q + i
    }

    /// `(source vertex, copy index)` of a result vertex.
    pub fn origin(&self, w: usize) -> (usize, usize) {
        (w / self.q, w % self.q)
    }

    /// Mask of all copies of source vertex `u`.
    pub fn copies_mask(&self, u: usize) -> u64 {
        full_mask(self.q) << (u * self.q)
    }

    /// `H↑q` for a subgraph `H` of the source.
    pub fn lift(&self, h: &Subgraph) -> Subgraph {
        let mask = mask_vertices(h.vertices()).fold(0, |m, u| m | self.copies_mask(u));
        let r = &self.result;
        let edges = r.edges().iter().enumerate().filter_map(|(idx, &(a, b))| {
            let (u, _) = self.origin(a);
            let (v, _) = self.origin(b);
            let keep = if u == v {
                h.has_vertex(u)
            } else {
                self.source.edge_index(u, v).is_some_and(|e| h.has_edge(e))
            };
            keep.then_some(idx)
        });
        Subgraph::new(r, mask, edges).expect("lifted edges lie inside lifted vertices")
    }

    /// `u↑q`, the clique on the copies of `u`.
    pub fn lift_vertex(&self, u: usize) -> Subgraph {
        Subgraph::induced(&self.result, self.copies_mask(u))
    }
}

pub fn blowup(g: &PatternGraph, q: usize) -> Result<BlowupMap, GraphError> {
    blowup_with_cap(g, q, DEFAULT_VERTEX_CAP)
}

pub fn blowup_with_cap(g: &PatternGraph, q: usize, cap: usize) -> Result<BlowupMap, GraphError> {
    if q == 0 {
        return Err(GraphError::InvalidParameter("blowup needs q >= 1".into()));
    }
    let size = g.vertex_count() * q;
    let cap = cap.min(MAX_VERTEX_CAP);
    if size > cap {
        return Err(GraphError::TooManyVertices {
            requested: size,
            cap,
        });
    }
    // Source edges first, in source order, so that q = 1 is the identity.
    let mut edges = Vec::new();
    for &(u, v) in g.edges() {
        for i in 0..q {
            for j in 0..q {
                edges.push((u * q + i, v * q + j));
            }
        }
    }
    for u in 0..g.vertex_count() {
        for i in 0..q {
            for j in i + 1..q {
                edges.push((u * q + i, u * q + j));
            }
        }
    }
    Ok(BlowupMap {
        source: g.clone(),
        q,
        result: PatternGraph::build_with_cap(size, &edges, cap)?,
    })
}

/// An injective homomorphism `K_q^d → Q_d↑(q/2)^d` for even `q`.
#[derive(Debug, Clone)]
pub struct HammingEmbedding {
    pub q: usize,
    pub d: usize,
    pub source: PatternGraph,
    pub target: BlowupMap,
    /// `map[x]` is the target vertex of source vertex `x`.
    pub map: Vec<usize>,
}

impl HammingEmbedding {
    /// Re-run the injectivity and edge-preservation checks.
    pub fn verify(&self) -> Result<(), GraphError> {
        let target = self.target.result();
        let mut seen = vec![false; target.vertex_count()];
        for (x, &t) in self.map.iter().enumerate() {
            if std::mem::replace(&mut seen[t], true) {
                return Err(GraphError::EmbeddingCheck(format!(
                    "vertex {x} collides at target {t}"
                )));
            }
        }
        for &(a, b) in self.source.edges() {
            if target.edge_index(self.map[a], self.map[b]).is_none() {
                return Err(GraphError::EmbeddingCheck(format!(
                    "edge ({a}, {b}) is not preserved"
                )));
            }
        }
        Ok(())
    }
}

/// The map `(x_1..x_d) ↦ ((x_i mod 2)_i, ψ((x_i div 2)_i))` with `ψ` the
/// base-`q/2` index. Checked before return.
pub fn hamming_embed(q: usize, d: usize) -> Result<HammingEmbedding, GraphError> {
    hamming_embed_with_cap(q, d, DEFAULT_VERTEX_CAP)
}

pub fn hamming_embed_with_cap(
    q: usize,
    d: usize,
    cap: usize,
) -> Result<HammingEmbedding, GraphError> {
    if q % 2 == 1 {
        return Err(GraphError::OddQ(q));
    }
    let half = q / 2;
    let copies = half
        .checked_pow(d as u32)
        .ok_or(GraphError::InvalidParameter("q/2 ^ d overflows".into()))?;
    let source = hamming_with_cap(q, d, cap)?;
    let target = blowup_with_cap(&hypercube_uncapped(d, cap)?, copies, cap)?;
    let map = (0..source.vertex_count())
        .map(|x| {
            let coords = hamming_coords(q, d, x);
            let cube: usize = coords.iter().enumerate().map(|(i, &c)| (c % 2) << i).sum();
            let right: Vec<usize> = coords.iter().map(|&c| c / 2).collect();
            target.copy(cube, hamming_index(half, &right))
        })
        .collect();
    let emb = HammingEmbedding {
        q,
        d,
        source,
        target,
        map,
    };
    emb.verify()?;
    Ok(emb)
}

fn hypercube_uncapped(d: usize, cap: usize) -> Result<PatternGraph, GraphError> {
    hamming_with_cap(2, d, cap)
}

/// Incremental edge-boundary counter for lexicographic prefixes of `Q_d`.
///
/// Yields `e(G(a), Q_d − G(a))` for `a = 0, 1, ..., 2^d`, where `G(a)` is the
/// set of vertices `{0, ..., a−1}`. Moving vertex `a` inside adds its `d`
/// edges and removes the `popcount(a)` edges to smaller vertices twice.
#[derive(Debug, Clone)]
pub struct PrefixBoundaryScan {
    d: u32,
    next: u64,
    end: u64,
    boundary: u64,
}

impl PrefixBoundaryScan {
    pub fn new(d: u32) -> Self {
        assert!(d < 63, "dimension {d} too large for a prefix scan");
        Self {
            d,
            next: 0,
            end: 1u64 << d,
            boundary: 0,
        }
    }
}

impl Iterator for PrefixBoundaryScan {
    /// `(a, boundary of G(a))`
    type Item = (u64, u64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next > self.end {
            return None;
        }
        let a = self.next;
        let out = (a, self.boundary);
        if a < self.end {
            self.boundary = (self.boundary as i64 + self.d as i64 - 2 * a.count_ones() as i64) as u64;
        }
        self.next += 1;
        Some(out)
    }
}

/// Number of `Q_d` edges with exactly one endpoint in `{0, ..., a−1}`.
pub fn hypercube_prefix_boundary(d: u32, a: u64) -> u64 {
    assert!(a <= 1u64 << d, "prefix length {a} exceeds 2^{d}");
    (0..a).map(|x| d as i64 - 2 * x.count_ones() as i64).sum::<i64>() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> PatternGraph {
        PatternGraph::build(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn build_examples() {
        let g = k3();
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_complete());
        assert_eq!(g.edge(2), (0, 2));
        let g = PatternGraph::build(2, &[]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(g.has_isolated_vertices());
        assert_eq!(
            PatternGraph::build(2, &[(0, 0)]),
            Err(GraphError::SelfLoop(0))
        );
        assert_eq!(
            PatternGraph::build(2, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(1, 0))
        );
        assert!(matches!(
            PatternGraph::build(2, &[(0, 2)]),
            Err(GraphError::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn combine_examples() {
        let g = k3();
        let ab = Subgraph::single_edge(&g, 0);
        let bc = Subgraph::single_edge(&g, 1);
        let u = combine(&ab, &bc, CombineMode::Union).unwrap();
        assert_eq!((u.vertex_count(), u.edge_count()), (3, 2));
        let i = combine(&ab, &bc, CombineMode::Intersection).unwrap();
        assert_eq!(i.vertices(), 0b010);
        assert_eq!(i.edge_count(), 0);
        let e = Subgraph::empty(&g);
        assert_eq!(e.union(&bc), bc);

        let other = PatternGraph::path(3).unwrap();
        let foreign = Subgraph::single_edge(&other, 0);
        assert_eq!(
            ab.combine(&foreign, CombineMode::Union),
            Err(GraphError::ParentMismatch)
        );
    }

    #[test]
    fn subgraph_rejects_dangling_edge() {
        let g = k3();
        assert_eq!(Subgraph::new(&g, 0b001, [0]), Err(GraphError::DanglingEdge(0)));
    }

    #[test]
    fn hamming_examples() {
        let k3h = hamming(3, 1).unwrap();
        assert!(k3h.is_complete());
        assert_eq!(k3h.vertex_count(), 3);
        let c4 = hamming(2, 2).unwrap();
        assert_eq!((c4.vertex_count(), c4.edge_count()), (4, 4));
        let q3 = hamming(2, 3).unwrap();
        assert_eq!((q3.vertex_count(), q3.edge_count()), (8, 12));
        assert!((0..8).all(|v| q3.degree(v) == 3));
        assert!(matches!(hamming(4, 3), Err(GraphError::TooManyVertices { .. })));
    }

    #[test]
    fn hamming_regularity() {
        for q in 2..=4 {
            for d in 1..=3 {
                let g = hamming_with_cap(q, d, 64).unwrap();
                assert_eq!(g.vertex_count(), q.pow(d as u32));
                assert!((0..g.vertex_count()).all(|v| g.degree(v) == d * (q - 1)));
            }
        }
    }

    #[test]
    fn blowup_examples() {
        let single = PatternGraph::build(1, &[]).unwrap();
        assert!(blowup(&single, 4).unwrap().result().is_complete());
        let k2 = PatternGraph::complete(2).unwrap();
        let b = blowup(&k2, 2).unwrap();
        assert_eq!(b.result().vertex_count(), 4);
        assert!(b.result().is_complete());
        let b = blowup(&k3(), 1).unwrap();
        assert_eq!(b.result(), &k3());
        assert_eq!(b.origin(2), (2, 0));
    }

    #[test]
    fn blowup_edge_rule() {
        let g = PatternGraph::path(3).unwrap();
        let b = blowup(&g, 2).unwrap();
        let r = b.result();
        for x in 0..r.vertex_count() {
            for y in 0..r.vertex_count() {
                if x == y {
                    continue;
                }
                let (u, _) = b.origin(x);
                let (v, _) = b.origin(y);
                let expect = u == v || g.edge_index(u, v).is_some();
                assert_eq!(r.edge_index(x, y).is_some(), expect);
            }
        }
        let lifted = b.lift(&Subgraph::full(&g));
        assert_eq!(lifted, Subgraph::full(r));
    }

    #[test]
    fn embed_examples() {
        let e = hamming_embed(2, 1).unwrap();
        assert_eq!(e.map, vec![0, 1]);
        let e = hamming_embed(4, 1).unwrap();
        assert_eq!(e.target.result().vertex_count(), 4);
        let e = hamming_embed(4, 2).unwrap();
        assert_eq!(e.source.vertex_count(), 16);
        assert_eq!(e.target.result().vertex_count(), 16);
        assert_eq!(e.source.edge_count(), 16 * 6 / 2);
        e.verify().unwrap();
        assert_eq!(hamming_embed(3, 1).unwrap_err(), GraphError::OddQ(3));
    }

    #[test]
    fn prefix_boundary_examples() {
        assert_eq!(hypercube_prefix_boundary(2, 2), 2);
        assert_eq!(hypercube_prefix_boundary(3, 4), 4);
        assert_eq!(hypercube_prefix_boundary(5, 0), 0);
    }

    #[test]
    fn prefix_boundary_matches_enumeration() {
        for d in 1..=5u32 {
            let g = hypercube(d as usize).unwrap();
            let scan: Vec<u64> = PrefixBoundaryScan::new(d).map(|(_, b)| b).collect();
            assert_eq!(scan.len(), (1 << d) + 1);
            for a in 0..=(1u64 << d) {
                let inside = |v: usize| (v as u64) < a;
                let cut = g
                    .edges()
                    .iter()
                    .filter(|&&(u, v)| inside(u) != inside(v))
                    .count() as u64;
                assert_eq!(scan[a as usize], cut, "d={d} a={a}");
                assert_eq!(hypercube_prefix_boundary(d, a), cut);
            }
        }
    }

    #[test]
    fn prefix_boundary_closed_form_and_symmetry() {
        for d in 1..=20u32 {
            let scan: Vec<u64> = PrefixBoundaryScan::new(d).map(|(_, b)| b).collect();
            let max = *scan.iter().max().unwrap();
            let closed: u64 = (0..d).rev().step_by(2).map(|k| 1u64 << k).sum();
            assert_eq!(max, closed, "d={d}");
            let total = 1usize << d;
            for a in 0..=total {
                assert_eq!(scan[a], scan[total - a]);
            }
        }
    }

    #[test]
    fn text_round_trip_and_garbage() {
        let g = k3();
        let back = PatternGraph::parse_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(PatternGraph::parse_text("p 2 1\ne 0 1\nx junk\n").is_err());
        assert!(PatternGraph::parse_text("p 2 1\ne 0 1\ne 0 1\n").is_err());
        assert!(PatternGraph::parse_text("e 0 1\n").is_err());
    }

    #[test]
    fn interval_and_all_subgraphs_counts() {
        let g = k3();
        assert_eq!(all_subgraphs(&g, 3).len(), 18);
        let full = Subgraph::full(&g);
        assert_eq!(interval(&g, &Subgraph::empty(&g), &full).len(), 18);
        let v0 = Subgraph::vertex_only(&g, 1);
        // Subgraphs containing vertex 0: 1 + 2*2 + 8 = 13.
        assert_eq!(interval(&g, &v0, &full).len(), 13);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sub_from_bits(g: &PatternGraph, vm: u64, em: u64) -> Subgraph {
            let vm = vm & g.all_vertices();
            let edges: Vec<usize> = (0..g.edge_count())
                .filter(|&e| em >> e & 1 == 1 && g.edge_mask(e) & !vm == 0)
                .collect();
            Subgraph::new(g, vm, edges).unwrap()
        }

        proptest! {
            #[test]
            fn combine_laws(bits in proptest::array::uniform6(any::<u64>())) {
                let g = PatternGraph::complete(5).unwrap();
                let a = sub_from_bits(&g, bits[0], bits[1]);
                let b = sub_from_bits(&g, bits[2], bits[3]);
                let c = sub_from_bits(&g, bits[4], bits[5]);
                prop_assert_eq!(a.union(&b), b.union(&a));
                prop_assert_eq!(a.intersection(&b), b.intersection(&a));
                prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
                prop_assert_eq!(a.union(&a), a.clone());
                prop_assert_eq!(a.intersection(&a), a.clone());
                prop_assert_eq!(Subgraph::empty(&g).union(&a), a.clone());
                prop_assert!(a.intersection(&b).is_subgraph_of(&a));
                prop_assert!(a.is_subgraph_of(&a.union(&b)));
            }
        }
    }
}
