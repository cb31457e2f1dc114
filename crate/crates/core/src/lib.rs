//! Incremental aggregation on the integer lattice Z^d.
//!
//! Three growth models attach one site at a time to the outer boundary of a
//! cluster: Eden (uniform boundary site), diffusion-limited aggregation
//! (first boundary site hit by a random walker from far away) and ballistic
//! aggregation (first or last boundary box met by an isotropic random line).
//! The crate also estimates the step distributions of these models on fixed
//! sets and analyzes growth records.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod measures;
pub mod models;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
pub use lattice::{Cluster, Site, SiteSet};
pub use models::{run_simulation, ModelConfig, ModelKind, SimulationRun};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
