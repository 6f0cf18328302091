//! Reference methods: the unregularized λ = 0 solver and a cross-validated
//! dimension sweep that picks the embedding dimension by held-out accuracy.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::error::{LoreError, Result};
use crate::metrics::triplet_accuracy;
use crate::model::{Embedding, FitResult, SolverConfig, TripletSet};
use crate::rng::{self, Stream};
use crate::solver::fit_lore;

pub const DEFAULT_CANDIDATE_DIMS: [usize; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSweepResult {
    pub selected_dim: usize,
    pub per_dim_cv_accuracy: BTreeMap<usize, f64>,
    /// Refit at `selected_dim` on every triplet.
    pub embedding: Embedding,
    pub wall_time_seconds: f64,
}

/// Same loop as [`fit_lore`] with the regularizer switched off, i.e. plain
/// gradient descent with step `1/μ`.
pub fn fit_unregularized(
    ts: &TripletSet,
    n: usize,
    ambient_dim: usize,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit_lore(ts, n, ambient_dim, &cfg.with_lambda(0.0))
}

/// Fold index of every triplet: round-robin over a seeded shuffle.
pub fn fold_assignment(n_triplets: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_triplets).collect();
    order.shuffle(&mut rng::seeded(seed, Stream::Folds));
    let mut fold_of = vec![0; n_triplets];
    for (k, &position) in order.iter().enumerate() {
        fold_of[position] = k % folds;
    }
    fold_of
}

/// Cross-validated dimension selection with a one-standard-deviation rule:
/// the smallest candidate whose mean held-out accuracy is within one pooled
/// fold standard deviation of the best mean wins.
pub fn dim_sweep_cv(
    ts: &TripletSet,
    n: usize,
    candidate_dims: &[usize],
    folds: usize,
    cfg: &SolverConfig,
) -> Result<DimSweepResult> {
    if folds < 2 {
        return Err(LoreError::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    if candidate_dims.is_empty() || candidate_dims.contains(&0) {
        return Err(LoreError::InvalidConfig("candidate dimensions must be positive and non-empty".into()));
    }
    let started = Stopwatch::start();
    let fold_of = fold_assignment(ts.len(), folds, cfg.seed);
    let mut splits = Vec::with_capacity(folds);
    for fold in 0..folds {
        let (held, train): (Vec<usize>, Vec<usize>) = (0..ts.len()).partition(|&k| fold_of[k] == fold);
        if train.is_empty() || held.is_empty() {
            return Err(LoreError::InsufficientTriplets { fold });
        }
        splits.push((ts.select(&train), ts.select(&held)));
    }

    let mut dims: Vec<usize> = candidate_dims.to_vec();
    dims.sort_unstable();
    dims.dedup();

    let mut per_dim_cv_accuracy = BTreeMap::new();
    let mut squared_dev = 0.0;
    for &dim in &dims {
        let mut scores = Vec::with_capacity(folds);
        for (train, held) in &splits {
            let fit = fit_unregularized(train, n, dim, cfg)?;
            scores.push(triplet_accuracy(&fit.embedding, held)?);
        }
        let mean = scores.iter().sum::<f64>() / folds as f64;
        squared_dev += scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>();
        per_dim_cv_accuracy.insert(dim, mean);
    }
    let pooled_sd = (squared_dev / (dims.len() * (folds - 1)) as f64).sqrt();
    let best = per_dim_cv_accuracy.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let selected_dim = dims
        .iter()
        .copied()
        .find(|d| per_dim_cv_accuracy[d] >= best - pooled_sd)
        .expect("the best candidate always qualifies");

    let embedding = fit_unregularized(ts, n, selected_dim, cfg)?.embedding;
    Ok(DimSweepResult {
        selected_dim,
        per_dim_cv_accuracy,
        embedding,
        wall_time_seconds: started.seconds(),
    })
}
