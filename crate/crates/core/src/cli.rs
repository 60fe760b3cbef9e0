//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 on rejected input, 2 when an internal consistency check fails.

use std::io::Write;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::experiments::{load_weighting, run_experiment, ExperimentConfig};
use crate::graph::{hamming, hamming_embed, hypercube_prefix_boundary, PatternGraph};
use crate::kappa::{
    approx, hypercube_mu, hypercube_path_decomposition, kappa_exact_with_cap, kappa_lower_bounds, kappa_search,
    kappa_witness, validate_sequence, KappaResult, SearchParams, UnionSequence, DEFAULT_EDGE_CAP,
};
use crate::randgraph::{sample_with, ColoredHostGraph, SampleOptions, DEFAULT_VERTEX_BUDGET};
use crate::rational::format_rational;
use crate::solver::{
    brute_force_with_cap, join_solve_with_cap, trie_solve, DEFAULT_BRUTE_FORCE_CAP, DEFAULT_CAPACITY_EXPONENT,
    DEFAULT_ROW_CAP,
};
use crate::threshold::{check_markov_conditions, from_markov, markov_decompose, ThresholdWeighting};
use crate::Error;

/// Environment overrides for resource caps.
pub const ENV_VERTEX_BUDGET: &str = "COLSUB_HOST_VERTEX_BUDGET";
pub const ENV_BRUTE_FORCE_CAP: &str = "COLSUB_BRUTE_FORCE_CAP";
pub const ENV_ROW_CAP: &str = "COLSUB_JOIN_ROW_CAP";
pub const ENV_EDGE_CAP: &str = "COLSUB_KAPPA_EDGE_CAP";

#[derive(Debug, Parser)]
#[command(name = "colsub", version, about = "Average-case colored subgraph isomorphism toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample X_Δ(n) and print its dump.
    Gen {
        #[command(flatten)]
        input: PatternArgs,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
    },
    /// κ_Δ values, witnesses and Hamming-graph analytics.
    Kappa {
        #[command(subcommand)]
        action: KappaCommand,
    },
    /// Decide or list colored copies in a sampled host graph.
    Solve {
        #[arg(value_enum)]
        method: SolveMethod,
        #[command(flatten)]
        input: PatternArgs,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        /// Union sequence JSON; defaults to the exact κ witness.
        #[arg(long)]
        sequence: Option<String>,
        /// Polylog exponent of the trie capacities.
        #[arg(long, default_value_t = DEFAULT_CAPACITY_EXPONENT)]
        a: f64,
        /// Fall back to the join solver when the trie overflows.
        #[arg(long)]
        fallback: bool,
    },
    /// Decompose a weighting into a zero-diagonal flow and round-trip it.
    Markov {
        #[command(flatten)]
        input: PatternArgs,
    },
    /// Hypercube and Hamming-graph helpers.
    Hamming {
        #[command(subcommand)]
        action: HammingCommand,
    },
    /// Run an experiment config and print or write its CSV.
    Experiment {
        #[arg(long)]
        config: String,
        /// Overrides the seed stored in the config.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<String>,
    },
}

#[derive(Debug, Args)]
struct PatternArgs {
    /// Pattern graph file (`p <v> <e>` then `e <u> <v>` lines).
    #[arg(long)]
    graph: String,
    /// Weighting file or `uniform-walk`.
    #[arg(long, default_value = "uniform-walk")]
    weighting: String,
}

#[derive(Debug, Subcommand)]
enum KappaCommand {
    /// Exact κ_Δ(G) by lattice closure.
    Exact {
        #[command(flatten)]
        input: PatternArgs,
        /// Print the witness sequence as JSON after the value.
        #[arg(long)]
        witness: bool,
    },
    /// Constructive upper bound from the clique, hypercube or edge-by-edge sequence.
    Witness {
        #[command(flatten)]
        input: PatternArgs,
    },
    /// Heuristic search for a weighting with α ≡ 1 and large κ_Δ.
    Search {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        iterations: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// μ(d) from the prefix boundary scan.
    Mu {
        #[arg(long)]
        d: u32,
    },
    /// Spectral bounds for K_q^d.
    Bounds {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        d: usize,
    },
    /// Path decomposition of Q_d.
    Pathdec {
        #[arg(long)]
        d: u32,
    },
}

#[derive(Debug, Subcommand)]
enum HammingCommand {
    /// μ(d), printed as `p/q`.
    Mu {
        #[arg(long)]
        d: u32,
    },
    /// Edge boundary of the first `a` vertices of Q_d.
    Boundary {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        a: u64,
    },
    /// Embedding of K_q^d into a blowup of Q_d.
    Embed {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        d: usize,
    },
    /// Print K_q^d in the pattern text format.
    Graph {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SolveMethod {
    Brute,
    Join,
    Trie,
}

#[derive(Serialize)]
struct SolveJson {
    decision: bool,
    counts: Vec<usize>,
    sizes: Vec<usize>,
    overflow: Option<String>,
}

fn env_or<T: std::str::FromStr>(name: &str, default: T) -> Result<T, Error> {
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{name}={v:?} is not a valid value"))),
        Err(_) => Ok(default),
    }
}

fn read(path: &str) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
}

fn load(input: &PatternArgs) -> Result<Arc<ThresholdWeighting>, Error> {
    let g = Arc::new(PatternGraph::parse_text(&read(&input.graph)?)?);
    Ok(Arc::new(load_weighting(g, &input.weighting)?))
}

fn host(w: Arc<ThresholdWeighting>, n: u64, seed: u64) -> Result<ColoredHostGraph, Error> {
    let opts = SampleOptions {
        vertex_budget: env_or(ENV_VERTEX_BUDGET, DEFAULT_VERTEX_BUDGET)?,
        ..SampleOptions::default()
    };
    Ok(sample_with(w, n, seed, opts)?)
}

fn print_kappa(out: &mut dyn Write, r: &KappaResult, witness: bool) -> Result<(), Error> {
    writeln!(out, "{}", format_rational(&r.value))?;
    writeln!(out, "{:.6}", approx(&r.value))?;
    if witness {
        writeln!(out, "{}", r.witness.to_json())?;
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    match cli.command {
        Command::Gen { input, n, seed } => {
            let x = host(load(&input)?, n, seed)?;
            out.write_all(x.to_dump().as_bytes())?;
        }
        Command::Kappa { action } => match action {
            KappaCommand::Exact { input, witness } => {
                let w = load(&input)?;
                let r = kappa_exact_with_cap(&w, env_or(ENV_EDGE_CAP, DEFAULT_EDGE_CAP)?)?;
                print_kappa(out, &r, witness)?;
            }
            KappaCommand::Witness { input } => {
                let w = load(&input)?;
                let r = kappa_witness(&w)?;
                print_kappa(out, &r, true)?;
            }
            KappaCommand::Search {
                graph,
                seed,
                iterations,
                restarts,
            } => {
                let g = Arc::new(PatternGraph::parse_text(&read(&graph)?)?);
                let params = SearchParams {
                    iterations,
                    restarts,
                    ..SearchParams::new(seed)
                };
                let s = kappa_search(g, params)?;
                print_kappa(out, &s.result, false)?;
                writeln!(out, "# baseline {}", format_rational(&s.baseline))?;
                out.write_all(s.weighting.to_text().as_bytes())?;
            }
            KappaCommand::Mu { d } => {
                let mu = hypercube_mu(d)?;
                writeln!(out, "{}", format_rational(&mu))?;
                writeln!(out, "{:.6}", approx(&mu))?;
            }
            KappaCommand::Bounds { q, d } => {
                let b = kappa_lower_bounds(q, d)?;
                writeln!(out, "lambda2 {}", format_rational(&b.lambda2))?;
                writeln!(out, "cheeger {}", format_rational(&b.cheeger_h_bound))?;
                writeln!(out, "kappa_bound {} ({:.6})", format_rational(&b.kappa_bound), approx(&b.kappa_bound))?;
                writeln!(out, "verified {}", b.verified)?;
                for (ev, mult) in &b.spectrum {
                    writeln!(out, "eigenvalue {} x{mult}", format_rational(ev))?;
                }
            }
            KappaCommand::Pathdec { d } => {
                let p = hypercube_path_decomposition(d)?;
                writeln!(out, "{}", serde_json::to_string(&p).map_err(|e| Error::Internal(e.to_string()))?)?;
            }
        },
        Command::Solve {
            method,
            input,
            n,
            seed,
            sequence,
            a,
            fallback,
        } => {
            let w = load(&input)?;
            let x = host(w.clone(), n, seed)?;
            let seq = match sequence {
                Some(path) => {
                    let s = UnionSequence::from_json(w.graph(), &read(&path)?)?;
                    validate_sequence(&s, &w)?;
                    s
                }
                None => kappa_exact_with_cap(&w, env_or(ENV_EDGE_CAP, DEFAULT_EDGE_CAP)?)?.witness,
            };
            let row_cap = env_or(ENV_ROW_CAP, DEFAULT_ROW_CAP)?;
            let json = match method {
                SolveMethod::Brute => {
                    let h = seq.last().cloned().expect("nonempty sequence");
                    let list = brute_force_with_cap(&x, &h, env_or(ENV_BRUTE_FORCE_CAP, DEFAULT_BRUTE_FORCE_CAP)?)?;
                    SolveJson {
                        decision: !list.is_empty(),
                        counts: vec![list.len()],
                        sizes: Vec::new(),
                        overflow: None,
                    }
                }
                SolveMethod::Join => {
                    let r = join_solve_with_cap(&x, &seq, row_cap)?;
                    SolveJson {
                        decision: r.decision,
                        sizes: r.counts.clone(),
                        counts: r.counts,
                        overflow: None,
                    }
                }
                SolveMethod::Trie => {
                    let r = trie_solve(&x, &seq, a, fallback)?;
                    SolveJson {
                        decision: r.decision,
                        counts: Vec::new(),
                        sizes: r.sizes,
                        overflow: r.overflow.map(|e| e.to_string()),
                    }
                }
            };
            writeln!(out, "{}", serde_json::to_string(&json).map_err(|e| Error::Internal(e.to_string()))?)?;
        }
        Command::Markov { input } => {
            let w = load(&input)?;
            let g = w.graph();
            writeln!(out, "delta(G) {}", format_rational(&w.delta(&crate::graph::Subgraph::full(g))))?;
            writeln!(out, "valid true")?;
            let m = markov_decompose(&w)?;
            check_markov_conditions(&w, &m)?;
            out.write_all(m.to_text().as_bytes())?;
            let back = from_markov(w.graph_arc().clone(), &m.to_column_stochastic())?;
            let same = back.alphas() == w.alphas() && back.betas() == w.betas();
            if !same {
                return Err(Error::Internal("from_markov does not reproduce the weighting".into()));
            }
            writeln!(out, "round-trip ok")?;
        }
        Command::Hamming { action } => match action {
            HammingCommand::Mu { d } => writeln!(out, "{}", format_rational(&hypercube_mu(d)?))?,
            HammingCommand::Boundary { d, a } => {
                if d >= 63 || a > 1u64 << d {
                    return Err(Error::Usage(format!("need d < 63 and a <= 2^d, got d={d} a={a}")));
                }
                writeln!(out, "{}", hypercube_prefix_boundary(d, a))?;
            }
            HammingCommand::Embed { q, d } => {
                let e = hamming_embed(q, d)?;
                e.verify()?;
                for (x, t) in e.map.iter().enumerate() {
                    writeln!(out, "{x} {t}")?;
                }
            }
            HammingCommand::Graph { q, d } => out.write_all(hamming(q, d)?.to_text().as_bytes())?,
        },
        Command::Experiment { config, seed, output } => {
            let mut cfg = ExperimentConfig::from_json(&read(&config)?)?;
            cfg.seed = seed;
            if output.is_some() {
                cfg.output = output;
            }
            let result = run_experiment(&cfg)?;
            if cfg.output.is_none() {
                out.write_all(result.csv.as_bytes())?;
            }
            if let Some(c) = result.checks.iter().find(|c| !c.passed) {
                return Err(Error::Check(format!("{} ({})", c.name, c.detail)));
            }
        }
    }
    Ok(())
}

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_internal() {
                2
            } else {
                1
            }
        }
    }
}
