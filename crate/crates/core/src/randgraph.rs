//! Seeded sampling of threshold random graphs `X_Δ(n)`.
//!
//! Pattern vertex `u` becomes a block of `m_u = max(1, round(n^{α(u)}))`
//! host vertices, and each pair across the blocks of a pattern edge `uv` is
//! present independently with probability `n^{−β(uv)}`.
//!
//! Each block row `(edge, i)` gets its own ChaCha8 stream derived from the
//! seed, and columns are visited by geometric skipping, so the result does
//! not depend on the order in which edges or rows are sampled.
//! Probabilities and skips use `libm` so that the arithmetic is the same on
//! every platform.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{PatternGraph, Subgraph};
use crate::rational::to_f64;
use crate::threshold::{ThresholdWeighting, WeightingError};

pub const DEFAULT_VERTEX_BUDGET: u64 = 1_000_000;
pub const DEFAULT_EDGE_BUDGET: f64 = 5e7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("n must be at least 2, got {0}")]
    SmallN(u64),
    #[error("host graph would have {requested} vertices, budget is {budget}")]
    VertexBudget { requested: u64, budget: u64 },
    #[error("host graph would have about {expected:.3e} edges, budget is {budget:.3e}")]
    EdgeBudget { expected: f64, budget: f64 },
    #[error("invalid weighting: {0}")]
    Weighting(#[from] WeightingError),
    #[error("pattern hash mismatch: dump has {found}, pattern hashes to {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("inconsistent host graph: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub vertex_budget: u64,
    pub edge_budget: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            vertex_budget: DEFAULT_VERTEX_BUDGET,
            edge_budget: DEFAULT_EDGE_BUDGET,
        }
    }
}

/// Mix a seed with a stream tag and an index (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let golden = 0x9e37_79b9_7f4a_7c15u64;
    mix(mix(mix(seed.wrapping_add(golden)) ^ stream.wrapping_mul(golden)) ^ index)
}

/// `max(1, round(n^α))`.
pub fn block_size(n: u64, alpha: f64) -> u64 {
    libm::round(libm::pow(n as f64, alpha)).max(1.0) as u64
}

/// `n^{−β}`, clamped to `[0, 1]`.
pub fn edge_probability(n: u64, beta: f64) -> f64 {
    libm::pow(n as f64, -beta).clamp(0.0, 1.0)
}

/// Stored pairs `(i, j)` between the blocks of pattern edge `(u, v)`, with
/// compressed adjacency in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEdges {
    pub u: usize,
    pub v: usize,
    pairs: Vec<(u32, u32)>,
    forward_offsets: Vec<u32>,
    forward: Vec<u32>,
    backward_offsets: Vec<u32>,
    backward: Vec<u32>,
}

fn csr(size: usize, items: impl Iterator<Item = (u32, u32)> + Clone) -> (Vec<u32>, Vec<u32>) {
    let mut offsets = vec![0u32; size + 1];
    for (a, _) in items.clone() {
        offsets[a as usize + 1] += 1;
    }
    for i in 0..size {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![0u32; offsets[size] as usize];
    for (a, b) in items {
        targets[fill[a as usize] as usize] = b;
        fill[a as usize] += 1;
    }
    for i in 0..size {
        targets[offsets[i] as usize..offsets[i + 1] as usize].sort_unstable();
    }
    (offsets, targets)
}

impl BlockEdges {
    fn new(u: usize, v: usize, mu: usize, mv: usize, mut pairs: Vec<(u32, u32)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let (forward_offsets, forward) = csr(mu, pairs.iter().copied());
        let (backward_offsets, backward) = csr(mv, pairs.iter().map(|&(i, j)| (j, i)));
        Self {
            u,
            v,
            pairs,
            forward_offsets,
            forward,
            backward_offsets,
            backward,
        }
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Partners in block `v` of index `i` in block `u`, sorted.
    pub fn forward(&self, i: u32) -> &[u32] {
        let i = i as usize;
        &self.forward[self.forward_offsets[i] as usize..self.forward_offsets[i + 1] as usize]
    }

    /// Partners in block `u` of index `j` in block `v`, sorted.
    pub fn backward(&self, j: u32) -> &[u32] {
        let j = j as usize;
        &self.backward[self.backward_offsets[j] as usize..self.backward_offsets[j + 1] as usize]
    }

    /// Neighbors of index `i` of pattern vertex `from` across this edge.
    pub fn partners(&self, from: usize, i: u32) -> &[u32] {
        if from == self.u {
            self.forward(i)
        } else {
            self.backward(i)
        }
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.forward(i).binary_search(&j).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct ColoredHostGraph {
    weighting: Arc<ThresholdWeighting>,
    n: u64,
    seed: u64,
    block_sizes: Vec<usize>,
    edges: Vec<BlockEdges>,
}

impl PartialEq for ColoredHostGraph {
    fn eq(&self, other: &Self) -> bool {
        self.weighting.graph() == other.weighting.graph()
            && self.n == other.n
            && self.seed == other.seed
            && self.block_sizes == other.block_sizes
            && self.edges == other.edges
    }
}

impl ColoredHostGraph {
    /// Assemble a host graph from explicit block sizes and pair lists, one
    /// list per pattern edge.
    pub fn from_parts(
        weighting: Arc<ThresholdWeighting>,
        n: u64,
        seed: u64,
        block_sizes: Vec<usize>,
        pairs: Vec<Vec<(u32, u32)>>,
    ) -> Result<Self, SampleError> {
        let g = weighting.graph();
        if block_sizes.len() != g.vertex_count() || pairs.len() != g.edge_count() {
            return Err(SampleError::Inconsistent(
                "block sizes or pair lists do not match the pattern".into(),
            ));
        }
        if block_sizes.iter().any(|&m| m == 0 || m > u32::MAX as usize) {
            return Err(SampleError::Inconsistent("block size out of range".into()));
        }
        let edges = g
            .edges()
            .iter()
            .zip(pairs)
            .map(|(&(u, v), list)| {
                let (mu, mv) = (block_sizes[u], block_sizes[v]);
                if let Some(&(i, j)) = list
                    .iter()
                    .find(|&&(i, j)| i as usize >= mu || j as usize >= mv)
                {
                    return Err(SampleError::Inconsistent(format!(
                        "pair ({i}, {j}) outside blocks of ({u}, {v})"
                    )));
                }
                Ok(BlockEdges::new(u, v, mu, mv, list))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            weighting,
            n,
            seed,
            block_sizes,
            edges,
        })
    }

    pub fn weighting(&self) -> &ThresholdWeighting {
        &self.weighting
    }

    pub fn weighting_arc(&self) -> &Arc<ThresholdWeighting> {
        &self.weighting
    }

    pub fn pattern(&self) -> &PatternGraph {
        self.weighting.graph()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block_size(&self, u: usize) -> usize {
        self.block_sizes[u]
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn block_edges(&self, e: usize) -> &BlockEdges {
        &self.edges[e]
    }

    pub fn vertex_total(&self) -> u64 {
        self.block_sizes.iter().map(|&m| m as u64).sum()
    }

    pub fn edge_total(&self) -> u64 {
        self.edges.iter().map(|b| b.len() as u64).sum()
    }

    /// Whether host vertices `u_i` and `v_j` are adjacent.
    pub fn has_edge(&self, u: usize, i: u32, v: usize, j: u32) -> bool {
        match self.pattern().edge_index(u, v) {
            Some(e) => {
                let b = &self.edges[e];
                if b.u == u {
                    b.contains(i, j)
                } else {
                    b.contains(j, i)
                }
            }
            None => false,
        }
    }

    /// Text dump: `x <pattern sha256> <n> <seed>`, then `m <block sizes>`,
    /// then for each pattern edge `b <u> <v> <count>` and its `<i> <j>` pairs.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "x {} {} {}", pattern_hash(self.pattern()), self.n, self.seed);
        let sizes: Vec<String> = self.block_sizes.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "m {}", sizes.join(" "));
        for b in &self.edges {
            let _ = writeln!(out, "b {} {} {}", b.u, b.v, b.len());
            for &(i, j) in &b.pairs {
                let _ = writeln!(out, "{i} {j}");
            }
        }
        out
    }

    pub fn parse_dump(weighting: Arc<ThresholdWeighting>, text: &str) -> Result<Self, SampleError> {
        let err = |line: usize, message: &str| SampleError::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty dump"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let ["x", hash, n, seed] = fields.as_slice() else {
            return Err(err(ln, "expected `x <hash> <n> <seed>`"));
        };
        let expected = pattern_hash(weighting.graph());
        if *hash != expected {
            return Err(SampleError::HashMismatch {
                expected,
                found: hash.to_string(),
            });
        }
        let n: u64 = n.parse().map_err(|_| err(ln, "bad n"))?;
        let seed: u64 = seed.parse().map_err(|_| err(ln, "bad seed"))?;
        let (ln, sizes) = lines.next().ok_or_else(|| err(ln + 1, "missing block sizes"))?;
        let mut fields = sizes.split_whitespace();
        if fields.next() != Some("m") {
            return Err(err(ln, "expected `m <sizes>`"));
        }
        let block_sizes: Vec<usize> = fields
            .map(|s| s.parse().map_err(|_| err(ln, "bad block size")))
            .collect::<Result<_, _>>()?;
        let g = weighting.graph();
        let mut pairs = vec![Vec::new(); g.edge_count()];
        let mut seen = vec![false; g.edge_count()];
        while let Some((ln, line)) = lines.next() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let ["b", u, v, count] = fields.as_slice() else {
                return Err(err(ln, "expected `b <u> <v> <count>`"));
            };
            let parse = |s: &str| s.parse::<usize>().map_err(|_| err(ln, "bad number"));
            let (u, v, count) = (parse(u)?, parse(v)?, parse(count)?);
            let e = g
                .edge_index(u, v)
                .filter(|&e| g.edge(e) == (u, v) && !seen[e])
                .ok_or_else(|| err(ln, "unknown or repeated block pair"))?;
            seen[e] = true;
            for _ in 0..count {
                let (ln, line) = lines.next().ok_or_else(|| err(ln, "truncated pair list"))?;
                let mut it = line.split_whitespace().map(|s| s.parse::<u32>());
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(i)), Some(Ok(j)), None) => pairs[e].push((i, j)),
                    _ => return Err(err(ln, "expected `<i> <j>`")),
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(err(0, "missing block pair"));
        }
        Self::from_parts(weighting, n, seed, block_sizes, pairs)
    }
}

/// Hex SHA-256 of the pattern's text serialization.
pub fn pattern_hash(g: &PatternGraph) -> String {
    hex::encode(Sha256::digest(g.to_text().as_bytes()))
}

pub fn sample(w: Arc<ThresholdWeighting>, n: u64, seed: u64) -> Result<ColoredHostGraph, SampleError> {
    sample_with(w, n, seed, SampleOptions::default())
}

pub fn sample_with(
    w: Arc<ThresholdWeighting>,
    n: u64,
    seed: u64,
    options: SampleOptions,
) -> Result<ColoredHostGraph, SampleError> {
    if n < 2 {
        return Err(SampleError::SmallN(n));
    }
    w.validate()?;
    let g = w.graph();
    let block_sizes: Vec<usize> = w
        .alphas()
        .iter()
        .map(|a| block_size(n, to_f64(a)) as usize)
        .collect();
    let total: u64 = block_sizes.iter().map(|&m| m as u64).sum();
    if total > options.vertex_budget {
        return Err(SampleError::VertexBudget {
            requested: total,
            budget: options.vertex_budget,
        });
    }
    let probs: Vec<f64> = w.betas().iter().map(|b| edge_probability(n, to_f64(b))).collect();
    let expected: f64 = g
        .edges()
        .iter()
        .zip(&probs)
        .map(|(&(u, v), p)| block_sizes[u] as f64 * block_sizes[v] as f64 * p)
        .sum();
    if expected > options.edge_budget {
        return Err(SampleError::EdgeBudget {
            expected,
            budget: options.edge_budget,
        });
    }
    let pairs: Vec<Vec<(u32, u32)>> = (0..g.edge_count())
        .into_par_iter()
        .map(|e| {
            let (u, v) = g.edge(e);
            sample_block(seed, e, block_sizes[u], block_sizes[v], probs[e])
        })
        .collect();
    ColoredHostGraph::from_parts(w, n, seed, block_sizes, pairs)
}

fn sample_block(seed: u64, e: usize, mu: usize, mv: usize, p: f64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    if p <= 0.0 {
        return out;
    }
    let edge_seed = derive_seed(seed, 1 + e as u64, 0);
    for i in 0..mu {
        if p >= 1.0 {
            out.extend((0..mv).map(|j| (i as u32, j as u32)));
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(edge_seed, 2, i as u64));
        let log_q = libm::log1p(-p);
        let mut j = 0f64;
        loop {
            // Skip ahead by a geometric number of failures.
            let r: f64 = 1.0 - rng.random::<f64>();
            j += libm::floor(libm::log(r) / log_q);
            if j >= mv as f64 {
                break;
            }
            out.push((i as u32, j as u32));
            j += 1.0;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCount {
    /// `Π m_u · Π n^{−β(e)}` with the realized block sizes.
    pub realized: f64,
    /// `n^{Δ(H)}`.
    pub idealized: f64,
}

pub fn expected_count(w: &ThresholdWeighting, h: &Subgraph, n: u64) -> Result<ExpectedCount, SampleError> {
    if !h.belongs_to(w.graph()) {
        return Err(SampleError::Weighting(WeightingError::ForeignSubgraph));
    }
    let mut realized = 1.0;
    for u in h.vertex_list() {
        realized *= block_size(n, to_f64(w.alpha(u))) as f64;
    }
    for e in h.edge_ids() {
        realized *= edge_probability(n, to_f64(w.beta(e)));
    }
    let idealized = libm::pow(n as f64, to_f64(&w.delta(h)));
    Ok(ExpectedCount { realized, idealized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::threshold::uniform_walk;

    fn k3_walk() -> Arc<ThresholdWeighting> {
        Arc::new(uniform_walk(Arc::new(PatternGraph::complete(3).unwrap())).unwrap())
    }

    #[test]
    fn zero_beta_gives_complete_blocks() {
        let g = Arc::new(PatternGraph::complete(2).unwrap());
        let w = Arc::new(ThresholdWeighting::new(g, vec![int(0), int(0)], vec![int(0)]).unwrap());
        for n in [2, 7] {
            let x = sample(w.clone(), n, 1).unwrap();
            assert_eq!(x.block_sizes(), &[1, 1]);
            assert_eq!(x.block_edges(0).pairs(), &[(0, 0)]);
        }
        let g = Arc::new(PatternGraph::path(3).unwrap());
        let w = Arc::new(ThresholdWeighting::new(g, vec![int(0), int(1), int(0)], vec![int(1), int(0)]).unwrap());
        let x = sample(w, 40, 3).unwrap();
        assert_eq!(x.block_sizes(), &[1, 40, 1]);
        assert_eq!(x.block_edges(1).len(), 40);
        let e = Arc::new(PatternGraph::complete(2).unwrap());
        let w = Arc::new(ThresholdWeighting::new(e, vec![ratio(1, 2); 2], vec![int(1)]).unwrap());
        assert_eq!(sample(w, 49, 3).unwrap().block_sizes(), &[7, 7]);
    }

    #[test]
    fn unit_alpha_block_sizes() {
        let x = sample(k3_walk(), 50, 9).unwrap();
        assert_eq!(x.block_sizes(), &[50, 50, 50]);
        assert!(x.edge_total() > 0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample(k3_walk(), 300, 42).unwrap();
        let b = sample(k3_walk(), 300, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_dump(), b.to_dump());
        let c = sample(k3_walk(), 300, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn budget_and_small_n() {
        assert_eq!(sample(k3_walk(), 1, 0).unwrap_err(), SampleError::SmallN(1));
        let opts = SampleOptions {
            vertex_budget: 100,
            ..SampleOptions::default()
        };
        assert!(matches!(
            sample_with(k3_walk(), 50, 0, opts),
            Err(SampleError::VertexBudget { requested: 150, .. })
        ));
    }

    #[test]
    fn dump_round_trip() {
        let x = sample(k3_walk(), 120, 5).unwrap();
        let back = ColoredHostGraph::parse_dump(k3_walk(), &x.to_dump()).unwrap();
        assert_eq!(back, x);
        let p3 = Arc::new(uniform_walk(Arc::new(PatternGraph::path(3).unwrap())).unwrap());
        assert!(matches!(
            ColoredHostGraph::parse_dump(p3, &x.to_dump()),
            Err(SampleError::HashMismatch { .. })
        ));
    }

    #[test]
    fn expected_count_examples() {
        let w = k3_walk();
        let g = w.graph().clone();
        let empty = expected_count(&w, &Subgraph::empty(&g), 100).unwrap();
        assert_eq!((empty.realized, empty.idealized), (1.0, 1.0));
        let full = expected_count(&w, &Subgraph::full(&g), 100).unwrap();
        assert!((full.realized - 1.0).abs() < 1e-9);
        let e = Arc::new(PatternGraph::complete(2).unwrap());
        let we = ThresholdWeighting::new(e.clone(), vec![int(1), int(1)], vec![ratio(3, 2)]).unwrap();
        let c = expected_count(&we, &Subgraph::full(&e), 100).unwrap();
        assert!((c.realized - 10.0).abs() < 1e-9);
        assert!((c.idealized - 10.0).abs() < 1e-9);
    }

    #[test]
    fn edge_probability_is_monotone_in_beta() {
        let mut last = 1.0;
        for k in 0..20 {
            let p = edge_probability(500, k as f64 / 8.0);
            assert!(p <= last);
            last = p;
        }
    }
}
