//! Reproducible experiments on the threshold random graph.
//!
//! Every output is a CSV whose first lines record the crate version and the
//! full configuration, so a rerun of the same configuration reproduces the
//! file byte for byte. Wall-clock timings are the one exception and are only
//! collected when `timing` is set.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{all_subgraphs, interval, GraphError, PatternGraph, Subgraph};
use crate::kappa::{approx, kappa_exact, validate_sequence, KappaError, UnionSequence};
use crate::randgraph::{derive_seed, expected_count, pattern_hash, sample_with, SampleError, SampleOptions};
use crate::rational::{format_rational, to_f64, Rational};
use crate::solver::{brute_force, count_copies, count_extensions, goodness_report, join_solve, SolverError};
use crate::threshold::{uniform_walk, ThresholdWeighting, WeightingError};

pub const FORMAT_VERSION: u32 = 1;
pub const UNIFORM_WALK: &str = "uniform-walk";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("hypothesis fails for A = {base}, U = {universe}: Δ({violating}) ≤ Δ(A)")]
    Hypothesis {
        base: String,
        universe: String,
        violating: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Weighting(#[from] WeightingError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Kappa(#[from] KappaError),
    #[error("csv: {0}")]
    Csv(String),
}

impl ExperimentError {
    pub fn is_internal(&self) -> bool {
        match self {
            ExperimentError::Kappa(k) => k.is_internal(),
            ExperimentError::Solver(SolverError::Internal(_)) => true,
            ExperimentError::Weighting(WeightingError::Internal(_)) => true,
            ExperimentError::Csv(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Concentration,
    Janson,
    Goodness,
    Scaling,
}

/// A subgraph named by its vertices and edges; edge endpoints are added
/// to the vertex set automatically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphSpec {
    #[serde(default)]
    pub vertices: Vec<usize>,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
}

impl SubgraphSpec {
    pub fn of(h: &Subgraph, g: &PatternGraph) -> Self {
        Self {
            vertices: h.vertex_list(),
            edges: h.edge_ids().map(|e| g.edge(e)).collect(),
        }
    }

    pub fn resolve(&self, g: &PatternGraph) -> Result<Subgraph, ExperimentError> {
        let mut mask = 0u64;
        let mut ids = Vec::with_capacity(self.edges.len());
        for &v in &self.vertices {
            if v >= g.vertex_count() {
                return Err(ExperimentError::Config(format!("vertex {v} is not in the pattern")));
            }
            mask |= 1 << v;
        }
        for &(u, v) in &self.edges {
            let e = g
                .edge_index(u, v)
                .ok_or_else(|| ExperimentError::Config(format!("{u}-{v} is not a pattern edge")))?;
            mask |= g.edge_mask(e);
            ids.push(e);
        }
        Ok(Subgraph::new(g, mask, ids)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub base: SubgraphSpec,
    pub universe: SubgraphSpec,
}

fn default_size_cap() -> usize {
    3
}

fn default_instances() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Path to the pattern graph file.
    pub pattern: String,
    /// Path to a weighting file, or `uniform-walk`.
    pub weighting: String,
    pub n: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    /// Largest `v(H)` enumerated by concentration and goodness runs.
    #[serde(default = "default_size_cap")]
    pub size_cap: usize,
    /// `(A, U)` pairs for janson runs.
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    /// A-instances sampled per trial in janson runs.
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Union sequence file for scaling runs; `kappa_exact` otherwise.
    #[serde(default)]
    pub sequence: Option<String>,
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, pattern: &str, weighting: &str, n: Vec<u64>, trials: usize, seed: u64) -> Self {
        Self {
            kind,
            pattern: pattern.into(),
            weighting: weighting.into(),
            n,
            trials,
            seed,
            output: None,
            size_cap: default_size_cap(),
            pairs: Vec::new(),
            instances: default_instances(),
            sequence: None,
            timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if self.n.is_empty() {
            return Err(ExperimentError::Config("empty n grid".into()));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be positive".into()));
        }
        if self.kind == ExperimentKind::Janson && self.pairs.is_empty() {
            return Err(ExperimentError::Config("janson runs need at least one (A, U) pair".into()));
        }
        Ok(())
    }
}

fn read(path: &str) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
        path: path.into(),
        message: e.to_string(),
    })
}

/// The inputs a config refers to, loaded from disk.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub weighting: Arc<ThresholdWeighting>,
    pub sequence: Option<UnionSequence>,
}

impl Fixture {
    pub fn new(weighting: Arc<ThresholdWeighting>) -> Self {
        Self {
            weighting,
            sequence: None,
        }
    }

    pub fn load(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let g = Arc::new(PatternGraph::parse_text(&read(&cfg.pattern)?)?);
        let w = load_weighting(g, &cfg.weighting)?;
        let sequence = match &cfg.sequence {
            Some(p) => Some(UnionSequence::from_json(w.graph(), &read(p)?)?),
            None => None,
        };
        Ok(Self {
            weighting: Arc::new(w),
            sequence,
        })
    }
}

/// `uniform-walk` or a weighting file; the result is validated.
pub fn load_weighting(g: Arc<PatternGraph>, source: &str) -> Result<ThresholdWeighting, ExperimentError> {
    let w = if source == UNIFORM_WALK {
        uniform_walk(g)?
    } else {
        ThresholdWeighting::parse_text(g, &read(source)?)?
    };
    w.validate()?;
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// CSV text plus the statistical checks evaluated while producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Report<R> {
    pub rows: Vec<R>,
    pub checks: Vec<Check>,
    pub notes: Vec<(String, String)>,
}

impl<R: Serialize> Report<R> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig, pattern: &PatternGraph) -> Result<String, ExperimentError> {
        let mut out = format!(
            "# colsub-experiment format={} version={}\n# config: {}\n# pattern-sha256: {}\n",
            FORMAT_VERSION,
            env!("CARGO_PKG_VERSION"),
            cfg.to_json(),
            pattern_hash(pattern)
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| ExperimentError::Csv(e.to_string()))?;
        }
        let body = w.into_inner().map_err(|e| ExperimentError::Csv(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| ExperimentError::Csv(e.to_string()))?);
        for (k, v) in &self.notes {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "fail" };
            out.push_str(&format!("# check {verdict}: {} ({})\n", c.name, c.detail));
        }
        Ok(out)
    }
}

fn trial_seed(seed: u64, n: u64, trial: usize) -> u64 {
    derive_seed(seed, n, trial as u64)
}

fn trial_host(
    w: &Arc<ThresholdWeighting>,
    n: u64,
    seed: u64,
    trial: usize,
) -> Result<crate::randgraph::ColoredHostGraph, ExperimentError> {
    Ok(sample_with(w.clone(), n, trial_seed(seed, n, trial), SampleOptions::default())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: u64,
    pub subgraph: String,
    pub vertices: usize,
    pub edges: usize,
    pub delta: String,
    pub trials: usize,
    pub mean: f64,
    pub max: u128,
    pub expected: f64,
    pub ratio: f64,
}

/// Trial mean and max of `|Sub_H(X)|` against its expectation, for every
/// nonempty `H ⊆ G` with `v(H) ≤ size_cap`.
///
/// Checked: `mean / expected ∈ [0.8, 1.25]` in every cell with expectation
/// at least 25 and at least 200 trials.
pub fn concentration_experiment(
    cfg: &ExperimentConfig,
    fx: &Fixture,
) -> Result<Report<ConcentrationRow>, ExperimentError> {
    cfg.check()?;
    let w = &fx.weighting;
    let g = w.graph();
    let subgraphs: Vec<Subgraph> = all_subgraphs(g, cfg.size_cap)
        .into_iter()
        .filter(|h| !h.is_empty())
        .collect();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &n in &cfg.n {
        let per_trial: Vec<Vec<u128>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let x = trial_host(w, n, cfg.seed, t)?;
                subgraphs
                    .iter()
                    .map(|h| count_copies(&x, h).map_err(ExperimentError::from))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        for (k, h) in subgraphs.iter().enumerate() {
            let counts = per_trial.iter().map(|c| c[k]);
            let mean = counts.clone().map(|c| c as f64).sum::<f64>() / cfg.trials as f64;
            let expected = expected_count(w, h, n)?.realized;
            let row = ConcentrationRow {
                n,
                subgraph: h.describe(),
                vertices: h.vertex_count(),
                edges: h.edge_count(),
                delta: format_rational(&w.delta(h)),
                trials: cfg.trials,
                mean,
                max: counts.max().unwrap_or(0),
                expected,
                ratio: mean / expected,
            };
            if expected >= 25.0 && cfg.trials >= 200 {
                checks.push(Check {
                    name: format!("n={n} {} mean/expected in [0.8, 1.25]", row.subgraph),
                    passed: (0.8..=1.25).contains(&row.ratio),
                    detail: format!("ratio {:.4}", row.ratio),
                });
            }
            rows.push(row);
        }
    }
    Ok(Report {
        rows,
        checks,
        notes: Vec::new(),
    })
}

/// Reject `(A, U)` unless `Δ(A) < Δ(H)` for every `H` with `A ⊊ H ⊆ U`.
pub fn check_janson_hypothesis(w: &ThresholdWeighting, a: &Subgraph, u: &Subgraph) -> Result<(), ExperimentError> {
    if !a.is_subgraph_of(u) {
        return Err(ExperimentError::Config(format!("{} is not inside {}", a.describe(), u.describe())));
    }
    let da = w.delta(a);
    for h in interval(w.graph(), a, u) {
        if &h != a && w.delta(&h) <= da {
            return Err(ExperimentError::Hypothesis {
                base: a.describe(),
                universe: u.describe(),
                violating: h.describe(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JansonRow {
    pub n: u64,
    pub base: String,
    pub universe: String,
    pub exponent: String,
    pub threshold: f64,
    pub trials: usize,
    /// Trials whose smallest sampled extension count reaches the threshold.
    pub fraction: f64,
    pub mean_count: f64,
    pub min_count: u64,
}

/// Extension counts of sampled `A`-instances into `U`, compared with
/// `0.5 · n^{Δ(U)−Δ(A)}`.
///
/// A trial succeeds when every sampled instance reaches the threshold; a
/// trial in which `A` has no instance fails. Checked: success fraction at
/// least 0.9 at the largest `n`.
pub fn janson_experiment(cfg: &ExperimentConfig, fx: &Fixture) -> Result<Report<JansonRow>, ExperimentError> {
    cfg.check()?;
    let w = &fx.weighting;
    let g = w.graph();
    let pairs: Vec<(Subgraph, Subgraph)> = cfg
        .pairs
        .iter()
        .map(|p| Ok((p.base.resolve(g)?, p.universe.resolve(g)?)))
        .collect::<Result<_, ExperimentError>>()?;
    for (a, u) in &pairs {
        check_janson_hypothesis(w, a, u)?;
    }
    let largest = *cfg.n.iter().max().expect("nonempty grid");
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &n in &cfg.n {
        for (pi, (a, u)) in pairs.iter().enumerate() {
            let exponent = w.delta(u) - w.delta(a);
            let threshold = 0.5 * (n as f64).powf(to_f64(&exponent));
            let per_trial: Vec<(u64, f64)> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let x = trial_host(w, n, cfg.seed, t)?;
                    let instances = brute_force(&x, a)?;
                    if instances.is_empty() {
                        return Ok((0, 0.0));
                    }
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(x.seed(), 0x6a61, pi as u64));
                    let k = cfg.instances.min(instances.len());
                    let mut picks = sample_indices(&mut rng, instances.len(), k).into_vec();
                    picks.sort_unstable();
                    let rows: Vec<&[u32]> = instances.rows().collect();
                    let counts = picks
                        .iter()
                        .map(|&i| count_extensions(&x, rows[i], a, u))
                        .collect::<Result<Vec<u64>, _>>()?;
                    let min = counts.iter().copied().min().unwrap_or(0);
                    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
                    Ok((min, mean))
                })
                .collect::<Result<_, ExperimentError>>()?;
            let hits = per_trial.iter().filter(|(m, _)| *m as f64 >= threshold).count();
            let row = JansonRow {
                n,
                base: a.describe(),
                universe: u.describe(),
                exponent: format_rational(&exponent),
                threshold,
                trials: cfg.trials,
                fraction: hits as f64 / cfg.trials as f64,
                mean_count: per_trial.iter().map(|p| p.1).sum::<f64>() / cfg.trials as f64,
                min_count: per_trial.iter().map(|p| p.0).min().unwrap_or(0),
            };
            if n == largest {
                checks.push(Check {
                    name: format!("n={n} A={} U={} fraction >= 0.9", row.base, row.universe),
                    passed: row.fraction >= 0.9,
                    detail: format!("fraction {:.4}", row.fraction),
                });
            }
            rows.push(row);
        }
    }
    Ok(Report {
        rows,
        checks,
        notes: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessCsvRow {
    pub n: u64,
    pub universe: String,
    pub base: String,
    pub vertex: usize,
    pub exponent: String,
    pub predicted: f64,
    pub max_count: u64,
    pub max_ratio: f64,
}

/// `goodness_report` over all trials, keeping per-triple maxima.
/// Checked: every ratio is at most `(log₂ n)^3`.
pub fn goodness_experiment(cfg: &ExperimentConfig, fx: &Fixture) -> Result<Report<GoodnessCsvRow>, ExperimentError> {
    cfg.check()?;
    let w = &fx.weighting;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &n in &cfg.n {
        let reports: Vec<Vec<crate::solver::GoodnessRow>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| Ok(goodness_report(&trial_host(w, n, cfg.seed, t)?, cfg.size_cap)?))
            .collect::<Result<_, ExperimentError>>()?;
        let bound = (n as f64).log2().powi(3);
        let mut worst = 0f64;
        for (k, first) in reports[0].iter().enumerate() {
            let max_count = reports.iter().map(|r| r[k].count).max().unwrap_or(0);
            let max_ratio = reports.iter().map(|r| r[k].ratio).fold(0f64, f64::max);
            worst = worst.max(max_ratio);
            rows.push(GoodnessCsvRow {
                n,
                universe: first.universe.describe(),
                base: first.base.describe(),
                vertex: first.vertex,
                exponent: format_rational(&first.exponent),
                predicted: first.predicted,
                max_count,
                max_ratio,
            });
        }
        checks.push(Check {
            name: format!("n={n} all ratios <= (log2 n)^3"),
            passed: worst <= bound,
            detail: format!("max ratio {worst:.4}, bound {bound:.4}"),
        });
    }
    Ok(Report {
        rows,
        checks,
        notes: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub trials: usize,
    pub median_peak: f64,
    pub max_peak: usize,
    pub decision_rate: f64,
    pub median_seconds: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSummary {
    pub kappa: Rational,
    pub slope: f64,
}

/// Median `join_solve` peak list size per `n`, and the slope of
/// `ln max(median, 1)` against `ln n` next to `max Δ` of the sequence.
pub fn scaling_experiment(
    cfg: &ExperimentConfig,
    fx: &Fixture,
) -> Result<(Report<ScalingRow>, ScalingSummary), ExperimentError> {
    cfg.check()?;
    let w = &fx.weighting;
    let (sequence, kappa) = match &fx.sequence {
        Some(s) => (s.clone(), validate_sequence(s, w)?),
        None => {
            let r = kappa_exact(w)?;
            (r.witness, r.value)
        }
    };
    let mut rows = Vec::new();
    for &n in &cfg.n {
        let per_trial: Vec<(usize, bool, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let x = trial_host(w, n, cfg.seed, t)?;
                let start = Instant::now();
                let out = join_solve(&x, &sequence)?;
                Ok((out.peak, out.decision, start.elapsed().as_secs_f64()))
            })
            .collect::<Result<_, ExperimentError>>()?;
        rows.push(ScalingRow {
            n,
            trials: cfg.trials,
            median_peak: median(per_trial.iter().map(|p| p.0 as f64).collect()),
            max_peak: per_trial.iter().map(|p| p.0).max().unwrap_or(0),
            decision_rate: per_trial.iter().filter(|p| p.1).count() as f64 / cfg.trials as f64,
            median_seconds: cfg.timing.then(|| median(per_trial.iter().map(|p| p.2).collect())),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_peak.max(1.0).ln()).collect();
    let slope = if rows.len() >= 2 { fit_slope(&xs, &ys) } else { f64::NAN };
    let summary = ScalingSummary {
        kappa: kappa.clone(),
        slope,
    };
    let notes = vec![
        ("kappa".into(), format_rational(&kappa)),
        ("slope".into(), format!("{slope:.6}")),
    ];
    let checks = if rows.len() >= 2 {
        vec![Check {
            name: "slope within 0.25 of max delta".into(),
            passed: (slope - approx(&kappa)).abs() <= 0.25,
            detail: format!("slope {slope:.4}, kappa {}", format_rational(&kappa)),
        }]
    } else {
        Vec::new()
    };
    Ok((Report { rows, checks, notes }, summary))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub checks: Vec<Check>,
}

impl ExperimentOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_with(cfg: &ExperimentConfig, fx: &Fixture) -> Result<ExperimentOutput, ExperimentError> {
    let g = fx.weighting.graph();
    let (csv, checks) = match cfg.kind {
        ExperimentKind::Concentration => {
            let r = concentration_experiment(cfg, fx)?;
            (r.to_csv(cfg, g)?, r.checks)
        }
        ExperimentKind::Janson => {
            let r = janson_experiment(cfg, fx)?;
            (r.to_csv(cfg, g)?, r.checks)
        }
        ExperimentKind::Goodness => {
            let r = goodness_experiment(cfg, fx)?;
            (r.to_csv(cfg, g)?, r.checks)
        }
        ExperimentKind::Scaling => {
            let (r, _) = scaling_experiment(cfg, fx)?;
            (r.to_csv(cfg, g)?, r.checks)
        }
    };
    Ok(ExperimentOutput { csv, checks })
}

/// Load the config's inputs, run it, and write `output` if set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let fx = Fixture::load(cfg)?;
    let out = run_with(cfg, &fx)?;
    if let Some(path) = &cfg.output {
        std::fs::write(Path::new(path), &out.csv).map_err(|e| ExperimentError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(out)
}
