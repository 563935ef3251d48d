//! Trust dynamics in imperfect automation.
//!
//! A Beta-distribution trust model fit per agent, trajectory clustering into
//! archetypes, a decision-tree archetype predictor, a synthetic experiment
//! simulator, and the statistics used to compare clusters.

pub mod analysis;
pub mod archetype;
pub mod classifier;
pub mod clustering;
pub mod estimation;
pub mod io;
pub mod profile;
pub mod sampling;
pub mod scenario;
pub mod special;
pub mod trust;

pub use archetype::Archetype;
pub use estimation::{CohortPrior, FitError, FitResult, OptimizerConfig};
pub use trust::{DetectorOutcome, TrustParams, TrustState, TrustTrajectory};
