//! Threshold weightings `(α, β)` with exact arithmetic.
//!
//! Every value is kept as a [`Rational`]; internally the weighting also
//! carries all of `α` and `β` scaled to one common denominator as `i128`
//! numerators, which is what the exponential enumerations run on.

use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::graph::{mask_vertices, BlowupMap, PatternGraph, Subgraph};
use crate::rational::{format_rational, int, parse_rational, CommonScale, Rational};

/// Default bound on `v(G)` for exhaustive subset scans.
pub const DEFAULT_ENUMERATION_BOUND: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightingError {
    #[error("expected {expected} {what} values, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("negative weight: {0}")]
    Negative(String),
    #[error("alpha({vertex}) = {value} exceeds 1")]
    AlphaAboveOne { vertex: usize, value: String },
    #[error("Δ = {delta} < 0 on the induced subgraph with vertex set {vertices:#x}")]
    NegativeDelta { vertices: u64, delta: String },
    #[error("Δ(G) = {delta}, must be 0")]
    NonZeroTotal { delta: String },
    #[error("exhaustive check needs v(G) <= {bound}, graph has {vertices} vertices")]
    TooLarge { vertices: usize, bound: usize },
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("subgraph is not contained in the universe")]
    NotContained,
    #[error("subgraph belongs to a different graph")]
    ForeignSubgraph,
    #[error("denominators too large for exact fixed-width evaluation")]
    ScaleOverflow,
    #[error("column {column} of the Markov matrix sums to {sum}, expected 1")]
    NotStochastic { column: usize, sum: String },
    #[error("Markov matrix has weight on ({0}, {1}), which is not an edge")]
    IllegalSupport(usize, usize),
    #[error("Markov matrix is {got}x{got}, expected {expected}x{expected}")]
    MarkovShape { expected: usize, got: usize },
    #[error("weighting is defined on a different graph")]
    GraphMismatch,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("internal check failed: {0}")]
    Internal(String),
}

/// A pair `(α, β)` on a pattern graph. Construction only requires
/// nonnegative weights; [`ThresholdWeighting::validate`] checks membership in
/// the threshold polytope.
#[derive(Debug, Clone)]
pub struct ThresholdWeighting {
    graph: Arc<PatternGraph>,
    alpha: Vec<Rational>,
    beta: Vec<Rational>,
    scale: CommonScale,
}

impl PartialEq for ThresholdWeighting {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph && self.alpha == other.alpha && self.beta == other.beta
    }
}

impl ThresholdWeighting {
    pub fn new(
        graph: Arc<PatternGraph>,
        alpha: Vec<Rational>,
        beta: Vec<Rational>,
    ) -> Result<Self, WeightingError> {
        if alpha.len() != graph.vertex_count() {
            return Err(WeightingError::Length {
                what: "alpha",
                expected: graph.vertex_count(),
                got: alpha.len(),
            });
        }
        if beta.len() != graph.edge_count() {
            return Err(WeightingError::Length {
                what: "beta",
                expected: graph.edge_count(),
                got: beta.len(),
            });
        }
        if let Some(bad) = alpha.iter().chain(&beta).find(|x| x.is_negative()) {
            return Err(WeightingError::Negative(format_rational(bad)));
        }
        let headroom = 4 * (graph.vertex_count() + graph.edge_count() + 1);
        let scale = CommonScale::new(alpha.iter().chain(&beta), headroom)
            .ok_or(WeightingError::ScaleOverflow)?;
        Ok(Self {
            graph,
            alpha,
            beta,
            scale,
        })
    }

    /// `α ≡ 1`, `β(uv) = 1/deg(u) + 1/deg(v)`.
    pub fn uniform_walk(graph: Arc<PatternGraph>) -> Result<Self, WeightingError> {
        if let Some(u) = (0..graph.vertex_count()).find(|&u| graph.degree(u) == 0) {
            return Err(WeightingError::IsolatedVertex(u));
        }
        let alpha = vec![Rational::one(); graph.vertex_count()];
        let beta = graph
            .edges()
            .iter()
            .map(|&(u, v)| {
                Rational::new(1.into(), (graph.degree(u) as i64).into())
                    + Rational::new(1.into(), (graph.degree(v) as i64).into())
            })
            .collect();
        Self::new(graph, alpha, beta)
    }

    /// `α ≡ 1` with the given `β`.
    pub fn with_unit_alpha(
        graph: Arc<PatternGraph>,
        beta: Vec<Rational>,
    ) -> Result<Self, WeightingError> {
        let alpha = vec![Rational::one(); graph.vertex_count()];
        Self::new(graph, alpha, beta)
    }

    pub fn graph(&self) -> &PatternGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<PatternGraph> {
        &self.graph
    }

    pub fn alpha(&self, u: usize) -> &Rational {
        &self.alpha[u]
    }

    pub fn beta(&self, e: usize) -> &Rational {
        &self.beta[e]
    }

    pub fn alphas(&self) -> &[Rational] {
        &self.alpha
    }

    pub fn betas(&self) -> &[Rational] {
        &self.beta
    }

    pub fn has_unit_alpha(&self) -> bool {
        self.alpha.iter().all(|a| a.is_one())
    }

    pub(crate) fn alpha_scaled(&self, u: usize) -> i128 {
        self.scale.numerators[u]
    }

    pub(crate) fn beta_scaled(&self, e: usize) -> i128 {
        self.scale.numerators[self.alpha.len() + e]
    }

    pub(crate) fn unscale(&self, v: i128) -> Rational {
        self.scale.to_rational(v)
    }

    pub(crate) fn alpha_mask_scaled(&self, mask: u64) -> i128 {
        mask_vertices(mask).map(|u| self.alpha_scaled(u)).sum()
    }

    pub(crate) fn delta_scaled(&self, h: &Subgraph) -> i128 {
        self.alpha_mask_scaled(h.vertices()) - h.edge_ids().map(|e| self.beta_scaled(e)).sum::<i128>()
    }

    /// `Δ(H) = Σ_{u∈V(H)} α(u) − Σ_{e∈E(H)} β(e)`.
    pub fn delta(&self, h: &Subgraph) -> Rational {
        self.unscale(self.delta_scaled(h))
    }

    fn check_member(&self, h: &Subgraph) -> Result<(), WeightingError> {
        if h.belongs_to(&self.graph) {
            Ok(())
        } else {
            Err(WeightingError::ForeignSubgraph)
        }
    }

    pub fn validate(&self) -> Result<(), WeightingError> {
        self.validate_with_bound(DEFAULT_ENUMERATION_BOUND)
    }

    /// Exhaustive membership check: `α ≤ 1`, `Δ(G[S]) ≥ 0` for every vertex
    /// set `S`, and `Δ(G) = 0`. Restricting to induced subgraphs suffices
    /// because `β ≥ 0`. The scan walks subsets in Gray-code order so each
    /// step toggles one vertex.
    pub fn validate_with_bound(&self, bound: usize) -> Result<(), WeightingError> {
        let n = self.graph.vertex_count();
        if n > bound {
            return Err(WeightingError::TooLarge {
                vertices: n,
                bound,
            });
        }
        if let Some(u) = (0..n).find(|&u| self.alpha[u] > Rational::one()) {
            return Err(WeightingError::AlphaAboveOne {
                vertex: u,
                value: format_rational(&self.alpha[u]),
            });
        }
        let (min, argmin) = self.min_induced_delta();
        if min < 0 {
            return Err(WeightingError::NegativeDelta {
                vertices: argmin,
                delta: format_rational(&self.unscale(min)),
            });
        }
        let total = self.delta_scaled(&Subgraph::full(&self.graph));
        if total != 0 {
            return Err(WeightingError::NonZeroTotal {
                delta: format_rational(&self.unscale(total)),
            });
        }
        Ok(())
    }

    /// Minimum over all vertex sets of the induced `Δ`, with a minimizer.
    fn min_induced_delta(&self) -> (i128, u64) {
        let n = self.graph.vertex_count();
        let nbrs: Vec<Vec<(usize, i128)>> = (0..n)
            .map(|u| {
                mask_vertices(self.graph.neighbors(u))
                    .map(|w| (w, self.beta_scaled(self.graph.edge_index(u, w).unwrap())))
                    .collect()
            })
            .collect();
        let mut mask = 0u64;
        let mut value = 0i128;
        let (mut best, mut best_mask) = (0i128, 0u64);
        for k in 1u64..(1u64 << n) {
            let v = k.trailing_zeros() as usize;
            let cut: i128 = nbrs[v]
                .iter()
                .filter(|(w, _)| mask >> w & 1 == 1)
                .map(|&(_, b)| b)
                .sum();
            if mask >> v & 1 == 0 {
                value += self.alpha_scaled(v) - cut;
            } else {
                value -= self.alpha_scaled(v) - cut;
            }
            mask ^= 1 << v;
            if value < best {
                best = value;
                best_mask = mask;
            }
        }
        (best, best_mask)
    }

    /// Serialize as `alpha` / `beta` lines, listing every value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (u, a) in self.alpha.iter().enumerate() {
            let _ = writeln!(out, "alpha {u} {}", format_rational(a));
        }
        for (e, b) in self.beta.iter().enumerate() {
            let (u, v) = self.graph.edge(e);
            let _ = writeln!(out, "beta {u} {v} {}", format_rational(b));
        }
        out
    }

    /// Parse `alpha <u> <p/q>` and `beta <u> <v> <p/q>` lines. Missing alpha
    /// values default to 1 and missing beta values to 0. `#` starts a comment.
    pub fn parse_text(graph: Arc<PatternGraph>, text: &str) -> Result<Self, WeightingError> {
        let mut alpha = vec![Rational::one(); graph.vertex_count()];
        let mut beta = vec![Rational::zero(); graph.edge_count()];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| WeightingError::Parse { line, message };
            let fields: Vec<&str> = content.split_whitespace().collect();
            let vertex = |s: &str| -> Result<usize, WeightingError> {
                s.parse::<usize>()
                    .ok()
                    .filter(|&u| u < graph.vertex_count())
                    .ok_or_else(|| err(format!("bad vertex {s:?}")))
            };
            let value = |s: &str| parse_rational(s).ok_or_else(|| err(format!("bad rational {s:?}")));
            match fields.as_slice() {
                ["alpha", u, p] => alpha[vertex(u)?] = value(p)?,
                ["beta", u, v, p] => {
                    let (u, v) = (vertex(u)?, vertex(v)?);
                    let e = graph
                        .edge_index(u, v)
                        .ok_or_else(|| err(format!("({u}, {v}) is not an edge")))?;
                    beta[e] = value(p)?;
                }
                _ => return Err(err(format!("unrecognized line {content:?}"))),
            }
        }
        Self::new(graph, alpha, beta)
    }
}

/// Free-function form of [`ThresholdWeighting::delta`].
pub fn delta_eval(w: &ThresholdWeighting, h: &Subgraph) -> Rational {
    w.delta(h)
}

pub fn uniform_walk(graph: Arc<PatternGraph>) -> Result<ThresholdWeighting, WeightingError> {
    ThresholdWeighting::uniform_walk(graph)
}

/// A square matrix `M(u, v)` of nonnegative rationals over the pattern's
/// vertices, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    n: usize,
    entries: Vec<Rational>,
}

impl MarkovChain {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![Rational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for u in 0..n {
            m.set(u, u, Rational::one());
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> &Rational {
        &self.entries[u * self.n + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: Rational) {
        self.entries[u * self.n + v] = value;
    }

    /// The random-walk matrix `M(u, v) = 1{uv ∈ E} / deg(v)`.
    pub fn uniform_walk(g: &PatternGraph) -> Self {
        let mut m = Self::zeros(g.vertex_count());
        for &(u, v) in g.edges() {
            m.set(u, v, Rational::new(1.into(), (g.degree(v) as i64).into()));
            m.set(v, u, Rational::new(1.into(), (g.degree(u) as i64).into()));
        }
        m
    }

    pub fn row_sum(&self, u: usize) -> Rational {
        (0..self.n).map(|v| self.get(u, v)).sum()
    }

    pub fn column_sum(&self, v: usize) -> Rational {
        (0..self.n).map(|u| self.get(u, v)).sum()
    }

    /// Convert a zero-diagonal chain with row sums `α(u)` into the
    /// column-stochastic form accepted by [`from_markov`]: transpose, then
    /// put `1 − α(v)` on the diagonal.
    pub fn to_column_stochastic(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for u in 0..self.n {
            for v in 0..self.n {
                if u != v {
                    out.set(u, v, self.get(v, u).clone());
                }
            }
        }
        for v in 0..self.n {
            let off: Rational = (0..self.n).filter(|&u| u != v).map(|u| out.get(u, v)).sum();
            out.set(v, v, Rational::one() - off);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for u in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|v| format_rational(self.get(u, v))).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// `α(u) = 1 − M(u,u)`, `β(uv) = M(u,v) + M(v,u)` for a column-stochastic
/// `M` supported on the diagonal and the edges of `graph`.
pub fn from_markov(
    graph: Arc<PatternGraph>,
    m: &MarkovChain,
) -> Result<ThresholdWeighting, WeightingError> {
    let n = graph.vertex_count();
    if m.size() != n {
        return Err(WeightingError::MarkovShape {
            expected: n,
            got: m.size(),
        });
    }
    for u in 0..n {
        for v in 0..n {
            let x = m.get(u, v);
            if x.is_negative() {
                return Err(WeightingError::Negative(format_rational(x)));
            }
            if u != v && !x.is_zero() && graph.edge_index(u, v).is_none() {
                return Err(WeightingError::IllegalSupport(u, v));
            }
        }
    }
    for v in 0..n {
        let sum = m.column_sum(v);
        if !sum.is_one() {
            return Err(WeightingError::NotStochastic {
                column: v,
                sum: format_rational(&sum),
            });
        }
    }
    let alpha = (0..n).map(|u| Rational::one() - m.get(u, u)).collect();
    let beta = graph
        .edges()
        .iter()
        .map(|&(u, v)| m.get(u, v) + m.get(v, u))
        .collect();
    let w = ThresholdWeighting::new(graph, alpha, beta)?;
    w.validate().map_err(|e| WeightingError::Internal(format!("from_markov produced {e}")))?;
    Ok(w)
}

/// Check the three flow conditions tying a zero-diagonal chain to `w`:
/// `M(u,u) = 0`, `M(u,v) + M(v,u) = β(uv)`, rows sum to `α(u)`, and no
/// weight off the edges.
pub fn check_markov_conditions(
    w: &ThresholdWeighting,
    m: &MarkovChain,
) -> Result<(), WeightingError> {
    let g = w.graph();
    let n = g.vertex_count();
    if m.size() != n {
        return Err(WeightingError::MarkovShape {
            expected: n,
            got: m.size(),
        });
    }
    let fail = |msg: String| Err(WeightingError::Internal(msg));
    for u in 0..n {
        if !m.get(u, u).is_zero() {
            return fail(format!("M({u},{u}) is nonzero"));
        }
        for v in 0..n {
            if m.get(u, v).is_negative() {
                return fail(format!("M({u},{v}) is negative"));
            }
            if u < v {
                let expect = g
                    .edge_index(u, v)
                    .map_or_else(Rational::zero, |e| w.beta(e).clone());
                if m.get(u, v) + m.get(v, u) != expect {
                    return fail(format!("M({u},{v}) + M({v},{u}) != beta"));
                }
            }
        }
        if &m.row_sum(u) != w.alpha(u) {
            return fail(format!("row {u} does not sum to alpha"));
        }
    }
    Ok(())
}

/// Decompose a valid weighting into a zero-diagonal chain with
/// `M(u,v) + M(v,u) = β(uv)` and row sums `α(u)`.
///
/// Recursion: pick the proper nonempty induced `H` minimizing `Δ` (ties by
/// fewest vertices, then smallest bitmask), route `Δ(H)` across the cut
/// `H → G−H` greedily in edge order, and recurse on both sides with the
/// reduced `α`.
pub fn markov_decompose(w: &ThresholdWeighting) -> Result<MarkovChain, WeightingError> {
    w.validate()?;
    let n = w.graph().vertex_count();
    let mut flow = vec![0i128; n * n];
    let mut alpha: Vec<i128> = (0..n).map(|u| w.alpha_scaled(u)).collect();
    decompose_rec(w, w.graph().all_vertices(), &mut alpha, &mut flow)?;
    let mut m = MarkovChain::zeros(n);
    for u in 0..n {
        for v in 0..n {
            m.set(u, v, w.unscale(flow[u * n + v]));
        }
    }
    check_markov_conditions(w, &m)?;
    Ok(m)
}

fn decompose_rec(
    w: &ThresholdWeighting,
    mask: u64,
    alpha: &mut [i128],
    flow: &mut [i128],
) -> Result<(), WeightingError> {
    let g = w.graph();
    let n = g.vertex_count();
    let size = mask.count_ones();
    if size <= 1 {
        if let Some(u) = mask_vertices(mask).next() {
            if alpha[u] != 0 {
                return Err(WeightingError::Internal(format!(
                    "single-vertex remainder {u} has nonzero alpha"
                )));
            }
        }
        return Ok(());
    }
    let local_delta = |sub: u64, alpha: &[i128]| -> i128 {
        let a: i128 = mask_vertices(sub).map(|u| alpha[u]).sum();
        a - g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| sub >> u & 1 == 1 && sub >> v & 1 == 1)
            .map(|(e, _)| w.beta_scaled(e))
            .sum::<i128>()
    };
    // Proper nonempty submasks, minimizing (Δ, size, mask).
    let mut best: Option<(i128, u32, u64)> = None;
    let mut sub = (mask - 1) & mask;
    while sub != 0 {
        let key = (local_delta(sub, alpha), sub.count_ones(), sub);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
        sub = (sub - 1) & mask;
    }
    let (need, _, h) = best.expect("at least two vertices");
    if need < 0 {
        return Err(WeightingError::Internal(
            "local weighting went negative during decomposition".into(),
        ));
    }
    let rest = mask & !h;
    let mut remaining = need;
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        let (inner, outer) = match (h >> a & 1 == 1, rest >> b & 1 == 1, h >> b & 1 == 1, rest >> a & 1 == 1) {
            (true, true, _, _) => (a, b),
            (_, _, true, true) => (b, a),
            _ => continue,
        };
        let beta = w.beta_scaled(e);
        let out = beta.min(remaining);
        flow[inner * n + outer] = out;
        flow[outer * n + inner] = beta - out;
        remaining -= out;
    }
    if remaining != 0 {
        return Err(WeightingError::Internal(
            "cut capacity below Δ(H); weighting is not a threshold weighting".into(),
        ));
    }
    for u in mask_vertices(h) {
        alpha[u] -= mask_vertices(rest).map(|v| flow[u * n + v]).sum::<i128>();
    }
    for u in mask_vertices(rest) {
        alpha[u] -= mask_vertices(h).map(|v| flow[u * n + v]).sum::<i128>();
    }
    decompose_rec(w, h, alpha, flow)?;
    decompose_rec(w, rest, alpha, flow)
}

fn check_interval(
    w: &ThresholdWeighting,
    universe: &Subgraph,
    base: &Subgraph,
) -> Result<(), WeightingError> {
    w.check_member(universe)?;
    w.check_member(base)?;
    if base.is_subgraph_of(universe) {
        Ok(())
    } else {
        Err(WeightingError::NotContained)
    }
}

/// Scaled `Δ*` and every minimizing vertex set. Each candidate is
/// `(S, E(U[S]))`, which is the best subgraph on vertex set `S` since `β ≥ 0`.
fn delta_star_scan(w: &ThresholdWeighting, universe: &Subgraph, base: &Subgraph) -> (i128, u64, Vec<u64>) {
    let g = w.graph();
    let edges: Vec<(u64, i128)> = universe
        .edge_ids()
        .map(|e| (g.edge_mask(e), w.beta_scaled(e)))
        .collect();
    let free = universe.vertices() & !base.vertices();
    let mut best = i128::MAX;
    let mut meet = u64::MAX;
    let mut minimizers = Vec::new();
    let mut sub = 0u64;
    loop {
        let s = base.vertices() | sub;
        let value = w.alpha_mask_scaled(s)
            - edges
                .iter()
                .filter(|(m, _)| m & !s == 0)
                .map(|&(_, b)| b)
                .sum::<i128>();
        if value < best {
            best = value;
            meet = s;
            minimizers.clear();
        }
        if value == best {
            meet &= s;
            minimizers.push(s);
        }
        if sub == free {
            break;
        }
        sub = (sub.wrapping_sub(free)) & free;
    }
    (best, meet, minimizers)
}

/// `Δ*_U(A) = min_{A ⊆ H ⊆ U} Δ(H)`.
pub fn delta_star(
    w: &ThresholdWeighting,
    universe: &Subgraph,
    base: &Subgraph,
) -> Result<Rational, WeightingError> {
    check_interval(w, universe, base)?;
    Ok(w.unscale(delta_star_scan(w, universe, base).0))
}

/// `Γ_U(A)`, the intersection of all minimizers of `Δ` over `[A, U]`.
///
/// Vertex set: intersection of the minimizing vertex sets. Edge set: `E(A)`
/// plus the positive-`β` edges of `U` inside that vertex set (a zero-`β` edge
/// outside `A` can always be dropped from a minimizer).
pub fn gamma(
    w: &ThresholdWeighting,
    universe: &Subgraph,
    base: &Subgraph,
) -> Result<Subgraph, WeightingError> {
    check_interval(w, universe, base)?;
    let g = w.graph();
    let (best, meet, _) = delta_star_scan(w, universe, base);
    let edges = universe.edge_ids().filter(|&e| {
        base.has_edge(e) || (g.edge_mask(e) & !meet == 0 && w.beta_scaled(e) > 0)
    });
    let out = Subgraph::new(g, meet, edges.collect::<Vec<_>>())
        .map_err(|e| WeightingError::Internal(e.to_string()))?;
    if w.delta_scaled(&out) != best || !base.is_subgraph_of(&out) {
        return Err(WeightingError::Internal(
            "gamma is not a minimizer containing the base".into(),
        ));
    }
    Ok(out)
}

/// Project a weighting on `G↑q` down to `G`:
/// `α′(u) = Δ(u↑q)/q`, `β′(uv) = (1/q) Σ_{i,j} β(u_i v_j)`.
pub fn blowup_project(
    w: &ThresholdWeighting,
    map: &BlowupMap,
) -> Result<ThresholdWeighting, WeightingError> {
    if w.graph() != map.result() {
        return Err(WeightingError::GraphMismatch);
    }
    w.validate()?;
    let src = map.source();
    let q = int(map.q() as i64);
    let alpha = (0..src.vertex_count())
        .map(|u| w.delta(&map.lift_vertex(u)) / &q)
        .collect();
    let beta = src
        .edges()
        .iter()
        .map(|&(u, v)| {
            let mut total = Rational::zero();
            for i in 0..map.q() {
                for j in 0..map.q() {
                    if let Some(e) = map.result().edge_index(map.copy(u, i), map.copy(v, j)) {
                        total += w.beta(e);
                    }
                }
            }
            total / &q
        })
        .collect();
    let projected = ThresholdWeighting::new(Arc::new(src.clone()), alpha, beta)?;
    projected
        .validate()
        .map_err(|e| WeightingError::Internal(format!("projection invalid: {e}")))?;
    Ok(projected)
}

/// A random valid weighting from a random lazy walk: column `v` spreads one
/// unit of mass over `v` itself (unless `unit_alpha`) and its neighbors with
/// integer weights in `1..=grain`. Zero diagonal gives `α ≡ 1`.
pub fn random_walk_weighting(
    graph: Arc<PatternGraph>,
    rng: &mut impl Rng,
    grain: u32,
    unit_alpha: bool,
) -> Result<ThresholdWeighting, WeightingError> {
    let n = graph.vertex_count();
    let mut m = MarkovChain::zeros(n);
    for v in 0..n {
        let mut targets: Vec<(usize, u32)> = mask_vertices(graph.neighbors(v))
            .map(|u| (u, rng.random_range(1..=grain)))
            .collect();
        if !unit_alpha || targets.is_empty() {
            targets.push((v, rng.random_range(0..=grain)));
        }
        let total: u32 = targets.iter().map(|t| t.1).sum();
        if total == 0 {
            m.set(v, v, Rational::one());
            continue;
        }
        for (u, x) in targets {
            m.set(u, v, Rational::new((x as i64).into(), (total as i64).into()));
        }
    }
    from_markov(graph, &m)
}
