//! Low-rank ordinal embedding from triplet comparisons.
//!
//! The solver learns item coordinates `Z` from comparisons "a is closer to
//! i than to j" by minimizing a softplus-smoothed triplet loss plus a
//! Schatten-p quasi-norm penalty, which drives unneeded singular values to
//! exactly zero and so recovers the intrinsic dimensionality.

mod clock;
pub mod baselines;
pub mod datagen;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod objective;
mod rng;
pub mod solver;

pub use error::{LoreError, Result};
pub use model::{
    validate_triplet_set, Embedding, FitResult, LossScale, MetricsReport, PerceptualSpace,
    SolverConfig, Triplet, TripletSet,
};
