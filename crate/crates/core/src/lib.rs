//! Cooperative edge-cache placement for tiled 3D streaming.
//!
//! The library models a domain of MEC servers that jointly cache equally
//! sized tiles, builds per-tile profit tables from a request aggregate, and
//! computes an exact minimum-average-latency placement with a successive
//! shortest augmenting path solver. Two interchangeable solver backends are
//! provided: a reference formulation over the full layered flow network
//! (`ksp`) and an optimized formulation over a collapsed (M+2)-node graph
//! (`oksp`). Heuristic baselines, a Zipf workload generator, and a session
//! simulator round out the experiment tooling.

pub mod baselines;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod ksp;
pub mod model;
pub mod oksp;
pub mod workload;

pub use error::{Error, Result};
