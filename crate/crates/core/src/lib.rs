//! Average-case colored subgraph isomorphism on threshold random graphs.
//!
//! [`threshold`] holds weightings and the lattice quantities `Δ*`, `Γ`;
//! [`kappa`] computes `κ_Δ(G)` exactly and builds witness union sequences;
//! [`randgraph`] samples `X_Δ(n)`; [`solver`] decides instances via joins
//! or tries; [`experiments`] and [`cli`] wrap everything for runs.

pub mod cli;
pub mod experiments;
pub mod graph;
pub mod kappa;
pub mod randgraph;
pub mod rational;
pub mod solver;
pub mod threshold;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Weighting(#[from] threshold::WeightingError),
    #[error(transparent)]
    Kappa(#[from] kappa::KappaError),
    #[error(transparent)]
    Sample(#[from] randgraph::SampleError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("internal check failed: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Whether the error signals a broken invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Internal(_) => true,
            Error::Kappa(e) => e.is_internal(),
            Error::Weighting(e) => matches!(e, threshold::WeightingError::Internal(_)),
            Error::Solver(e) => matches!(e, solver::SolverError::Internal(_)),
            Error::Experiment(e) => e.is_internal(),
            _ => false,
        }
    }
}
