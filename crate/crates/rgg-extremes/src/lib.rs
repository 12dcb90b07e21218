//! Simulation and verification toolkit for degree extremes of random
//! geometric graphs.
//!
//! The library covers the computable side of the theory end to end:
//!
//! * exact threshold radii `S_k` and degree statistics on sampled clouds
//!   ([`rgg`], backed by the cell-list index in [`geometry`]);
//! * enumeration of the feasible graph classes on `k+1` vertices and Monte
//!   Carlo estimation of their constants `μ_Γ` ([`graph_atlas`]);
//! * closed-form limit laws, Lambert-W radius schedules and tail bounds
//!   ([`limit_laws`]);
//! * empirical-law machinery: ECDF/KS, total variation, compound-Poisson
//!   pmfs and box-count comparisons ([`stats`]);
//! * seeded, parallel experiment drivers with CSV/JSON outputs ([`runner`]).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod geometry;
pub mod graph_atlas;
pub mod limit_laws;
pub mod rgg;
pub mod runner;
pub mod sampling;
pub mod stats;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {0} out of range for {1} points")]
    IndexOutOfRange(usize, usize),
    #[error("need k < n, got k={k} with n={n}")]
    InsufficientPoints { k: usize, n: usize },
    #[error("graph too large: {0} vertices (limit {1})")]
    GraphTooLarge(usize, usize),
    #[error("radius schedule out of the asymptotic regime: Lambert-W argument {0} < -1/e")]
    ScheduleOutOfRange(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub use geometry::{unit_ball_volume, CellGrid, NormSpec};
pub use sampling::{Density, PointCloud, RngStream};
