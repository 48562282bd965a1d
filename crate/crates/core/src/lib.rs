//! Exact recovery of a ranking from noisy, ensembled pairwise comparisons.
//!
//! The crate covers the probability model (strong stochastic transitivity
//! matrices built from a link function), a seeded sampler for the observation
//! design, the moment and maximum-likelihood rankers, the connectivity of the
//! observed comparison graph, closed-form recovery bounds and thresholds, and
//! the Monte Carlo experiments that tie them together.

pub mod bounds;
pub mod cli;
pub mod connectivity;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod model;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod union_find;

pub use error::{Error, Result};
