//! WebAssembly bindings for the interactive demo page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs nothing beyond `JSON.parse`.

use lore_core::datagen::{generate_space, sample_triplets, triplet_universe_size, GenConfig};
use lore_core::metrics::{measured_rank, principal_axes, triplet_accuracy};
use lore_core::solver::{fit_lore, svt_weights as weights};
use lore_core::{linalg, Embedding, SolverConfig, TripletSet};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct FitView {
    singular_values: Vec<f64>,
    measured_rank: usize,
    test_accuracy: f64,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
    /// Items projected onto the two leading principal axes.
    coords: Vec<[f64; 2]>,
    /// Ground truth projected the same way, for side-by-side plotting.
    truth: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct PathPoint {
    lambda: f64,
    measured_rank: usize,
    test_accuracy: f64,
}

fn problem(
    n_items: usize,
    intrinsic_rank: usize,
    noise_variance: f64,
    query_fraction: f64,
    seed: u64,
) -> Result<(TripletSet, TripletSet, Embedding), String> {
    let gen = GenConfig {
        n_items,
        intrinsic_rank,
        noise_variance,
        query_fraction,
        test_size: (triplet_universe_size(n_items) / 4).clamp(1, 1000),
        seed,
    };
    let space = generate_space(&gen).map_err(|e| e.to_string())?;
    let (train, test) = sample_triplets(&space, &gen).map_err(|e| e.to_string())?;
    let truth = Embedding::new(space.into_matrix()).map_err(|e| e.to_string())?;
    Ok((train, test, truth))
}

fn plane(z: &Embedding) -> Result<Vec<[f64; 2]>, String> {
    let axes = principal_axes(z, 2.min(z.ambient_dim())).map_err(|e| e.to_string())?;
    Ok((0..z.n_items())
        .map(|i| {
            let at = |k: usize| axes.get(k).map_or(0.0, |a| a.projections[i]);
            [at(0), at(1)]
        })
        .collect())
}

fn solver(lambda: f64, p: f64, max_iters: usize, seed: u64) -> SolverConfig {
    SolverConfig {
        lambda,
        p,
        max_iters,
        seed,
        ..SolverConfig::default()
    }
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Simulates triplets from a random space, fits one embedding and returns
/// its spectrum, accuracy, objective trace and a 2-D view.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn fit_synthetic(
    n_items: usize,
    intrinsic_rank: usize,
    noise_variance: f64,
    query_fraction: f64,
    lambda: f64,
    p: f64,
    ambient_dim: usize,
    max_iters: usize,
    seed: u64,
) -> Result<String, String> {
    let (train, test, truth) = problem(n_items, intrinsic_rank, noise_variance, query_fraction, seed)?;
    let fit = fit_lore(&train, n_items, ambient_dim, &solver(lambda, p, max_iters, seed)).map_err(|e| e.to_string())?;
    let z = &fit.embedding;
    to_json(&FitView {
        singular_values: linalg::singular_values(z.matrix()).map_err(|e| e.to_string())?,
        measured_rank: measured_rank(z).map_err(|e| e.to_string())?,
        test_accuracy: triplet_accuracy(z, &test).map_err(|e| e.to_string())?,
        iterations: fit.iterations_run,
        converged: fit.converged,
        coords: plane(z)?,
        truth: plane(&truth)?,
        objective_trace: fit.objective_trace,
    })
}

/// Measured rank and test accuracy along a λ grid on one simulated problem.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn lambda_path(
    n_items: usize,
    intrinsic_rank: usize,
    noise_variance: f64,
    query_fraction: f64,
    p: f64,
    ambient_dim: usize,
    max_iters: usize,
    seed: u64,
    lambdas: Vec<f64>,
) -> Result<String, String> {
    let (train, test, _) = problem(n_items, intrinsic_rank, noise_variance, query_fraction, seed)?;
    let mut path = Vec::with_capacity(lambdas.len());
    for lambda in lambdas {
        let fit = fit_lore(&train, n_items, ambient_dim, &solver(lambda, p, max_iters, seed)).map_err(|e| e.to_string())?;
        path.push(PathPoint {
            lambda,
            measured_rank: measured_rank(&fit.embedding).map_err(|e| e.to_string())?,
            test_accuracy: triplet_accuracy(&fit.embedding, &test).map_err(|e| e.to_string())?,
        });
    }
    to_json(&path)
}

/// Per-direction thresholds `(λp/μ)·σ^(p−1)` for a given spectrum.
#[wasm_bindgen]
pub fn svt_weights(singular_values: Vec<f64>, lambda: f64, p: f64, mu: f64) -> Result<String, String> {
    let cfg = SolverConfig {
        lambda,
        p,
        mu,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    // Infinite weights become null in JSON.
    let w: Vec<Option<f64>> = weights(&singular_values, &cfg).into_iter().map(|x| x.is_finite().then_some(x)).collect();
    to_json(&w)
}
