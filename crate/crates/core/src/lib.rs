//! Graphical channels over sparse random hypergraphs.
//!
//! A *graphical channel* emits one noisy observation per hyperedge of a
//! random hypergraph, where each observation depends on the incident node
//! variables through a fixed kernel `Q: {0,1}^k -> {0..q-1}`. The family
//! covers planted constraint satisfaction (SAT / NAE-SAT / XOR-SAT),
//! the stochastic block model, and LDGM-coded channels.
//!
//! The crate provides:
//! - kernel construction and validation ([`kernels`], [`biso`]),
//! - hypergraph ensembles and interpolation paths ([`hypergraph`]),
//! - exact and Monte Carlo conditional entropies, solution counting,
//!   and posterior tables ([`engine`]),
//! - the replica functional `Gamma_l`, Walsh analysis, and convexity
//!   auditing ([`gamma`], [`walsh`]),
//! - desk-scale experiment drivers with seeded, thread-count-independent
//!   reproducibility ([`experiments`]),
//! - file formats: instance JSON, DIMACS exports, CSV results and
//!   manifests ([`formats`]).

pub mod biso;
pub mod engine;
pub mod experiments;
pub mod formats;
pub mod gamma;
pub mod hypergraph;
pub mod kernels;
pub mod rng;
pub mod walsh;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("channel is not BISO: {0}")]
    NotBiso(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("arity mismatch: graph k={graph_k}, kernel k={kernel_k}")]
    ArityMismatch { graph_k: usize, kernel_k: usize },
    #[error("enumeration budget exceeded: need {needed} evaluations, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("no assignment has positive likelihood for the given observations")]
    ZeroMarginal,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Absolute tolerance for probability comparisons.
pub const PROB_TOL: f64 = 1e-12;
