//! Deterministic ODE approximations of spreading processes on heterogeneous,
//! fully rewiring random networks, plus an agent-based Monte-Carlo oracle and
//! the analysis tooling built on top of them.

pub mod abm;
pub mod analysis;
pub mod degree_dist;
pub mod error;
pub mod mixing;
pub mod ode;

pub use degree_dist::{DegreeDistribution, DistributionSpec};
pub use error::{EpiError, Result};
