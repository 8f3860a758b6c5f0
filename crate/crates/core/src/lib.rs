//! Simulation and verification toolkit for 1+1 dimensional directed polymers
//! in a random environment.
//!
//! The crate provides exact transfer-matrix evaluation of normalized point-to-
//! point and free partition functions, counter-based reproducible disorder
//! fields, a coarse-grained good-bond layer with an oriented-percolation
//! backend, polynomial-chaos decompositions with exact small-system oracles,
//! random-walk analytics (exit rates, reflection couplings, continuity moduli),
//! and intermediate-disorder scaling helpers. The `experiments` module wires
//! these into reproducible batch runs with manifest output.

pub mod chaos;
pub mod coarse_grain;
pub mod continuum;
pub mod environment;
pub mod experiments;
pub mod numeric;
pub mod polymer;
pub mod rng;
pub mod walk;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter left the domain where the requested quantity is defined
    /// (e.g. a log moment generating function evaluated past its abscissa).
    #[error("domain error: {0}")]
    Domain(String),

    /// A request exceeded a configured size or cost guard.
    #[error("cost guard: {0}")]
    Cost(String),

    /// Configuration was structurally invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure while running an experiment.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Serialization failure in manifest or report output.
    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use environment::{
    DisorderField, DisorderLaw, EnvironmentField, ShiftedField, TableField, ZeroField,
};
pub use polymer::{PartitionSlice, PathConstraint};
