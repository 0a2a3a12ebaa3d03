//! Orchestration around `isac-core`: scenario files, dataset generation,
//! training of the two networks, trajectory evaluation and EIRP statistics.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod scenario_file;
pub mod stats;

pub use error::{Result, SimError};
