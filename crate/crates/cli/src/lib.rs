//! Batch pipeline over the trust-dynamics toolkit: simulate a cohort, fit
//! every agent, cluster trajectories, classify profiles, compare clusters and
//! export per-agent reports.

pub mod error;
pub mod manifest;
pub mod output;
pub mod stages;

pub use error::{ErrorKind, StageError};
pub use manifest::RunManifest;
pub use stages::Pipeline;
