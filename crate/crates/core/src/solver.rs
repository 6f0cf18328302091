//! Iteratively reweighted proximal gradient with singular value thresholding.
//!
//! Each iteration takes a gradient step on the smoothed triplet loss and
//! shrinks the singular values of the result by weights `(λp/μ)·σᵖ⁻¹`
//! computed from the current iterate's spectrum. Directions whose previous
//! singular value is zero get an infinite weight and stay at zero.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::error::{LoreError, Result};
use crate::linalg;
use crate::model::{Embedding, FitResult, SolverConfig, TripletSet};
use crate::objective::{self, DISTANCE_EPS};
use crate::rng::{self, Stream};

/// Singular values at or below this are treated as already eliminated.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// Diagnostics from one thresholding step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvtStepRecord {
    /// Singular values of the gradient-stepped matrix, descending.
    pub shifted_singulars: Vec<f64>,
    /// Per-direction thresholds; `f64::INFINITY` marks an eliminated direction.
    pub weights: Vec<f64>,
    pub kept_count: usize,
}

/// I.i.d. `N(0, init_variance)` entries, deterministic in `cfg.seed`.
pub fn init_embedding(n: usize, ambient_dim: usize, cfg: &SolverConfig) -> Embedding {
    let normal = Normal::new(0.0, cfg.init_variance.sqrt()).expect("positive variance");
    let mut rng = rng::seeded(cfg.seed, Stream::Init);
    let data: Vec<f64> = (0..n * ambient_dim).map(|_| normal.sample(&mut rng)).collect();
    Embedding::new(DMatrix::from_row_slice(n, ambient_dim, &data)).expect("finite samples")
}

/// Reweighting thresholds for the current spectrum.
pub fn svt_weights(sigma_prev: &[f64], cfg: &SolverConfig) -> Vec<f64> {
    let scale = cfg.lambda * cfg.p / cfg.mu;
    sigma_prev
        .iter()
        .map(|&s| {
            if scale == 0.0 {
                0.0
            } else if cfg.p < 1.0 && s <= SINGULAR_FLOOR {
                f64::INFINITY
            } else {
                scale * s.powf(cfg.p - 1.0)
            }
        })
        .collect()
}

fn check_shapes(z: &DMatrix<f64>, grad: &DMatrix<f64>, sigma_prev: &[f64]) -> Result<()> {
    if grad.shape() != z.shape() {
        return Err(LoreError::ShapeMismatch(format!(
            "gradient is {:?}, iterate is {:?}",
            grad.shape(),
            z.shape()
        )));
    }
    let k = z.nrows().min(z.ncols());
    if sigma_prev.len() != k {
        return Err(LoreError::ShapeMismatch(format!(
            "expected {k} previous singular values, got {}",
            sigma_prev.len()
        )));
    }
    Ok(())
}

/// Thresholds the spectrum of an already gradient-stepped matrix. Returns the
/// next iterate and its singular values (descending).
fn threshold_step(
    step: &DMatrix<f64>,
    sigma_prev: &[f64],
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, Vec<f64>, SvtStepRecord)> {
    let decomposition = linalg::svd(step)?;
    let weights = svt_weights(sigma_prev, cfg);
    let thresholded: Vec<f64> = decomposition
        .singular_values
        .iter()
        .zip(&weights)
        .map(|(&s, &w)| if w.is_infinite() { 0.0 } else { (s - w).max(0.0) })
        .collect();
    let kept_count = thresholded.iter().filter(|&&s| s > 0.0).count();
    let next = decomposition.reconstruct_with(&thresholded);
    let record = SvtStepRecord {
        shifted_singulars: decomposition.singular_values.iter().copied().collect(),
        weights,
        kept_count,
    };
    Ok((next, thresholded, record))
}

/// One proximal step: SVD of `Z − grad/μ`, reweighted shrinkage paired by
/// rank order with `sigma_prev`, and reconstruction at the original shape.
pub fn svt_step(
    z: &Embedding,
    grad: &DMatrix<f64>,
    sigma_prev: &[f64],
    cfg: &SolverConfig,
) -> Result<(Embedding, SvtStepRecord)> {
    check_shapes(z.matrix(), grad, sigma_prev)?;
    let step = z.matrix() - grad * (1.0 / cfg.mu);
    let (next, _, record) = threshold_step(&step, sigma_prev, cfg)?;
    Ok((Embedding::new(next)?, record))
}

/// Runs the solver from a random Gaussian start.
pub fn fit_lore(ts: &TripletSet, n: usize, ambient_dim: usize, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    if ts.n_items() != n {
        return Err(LoreError::ShapeMismatch(format!(
            "triplet set indexes {} items, expected {n}",
            ts.n_items()
        )));
    }
    if ambient_dim == 0 || n == 0 {
        return Err(LoreError::InvalidConfig("embedding shape must be non-empty".into()));
    }
    fit_from(ts, init_embedding(n, ambient_dim, cfg), cfg)
}

/// Runs the solver from a caller-supplied starting embedding.
pub fn fit_from(ts: &TripletSet, start: Embedding, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    ts.check_items(start.n_items())?;
    let started = Stopwatch::start();
    let loss_factor = objective::loss_factor(cfg.loss_scale, ts.len());

    let mut z = start;
    let mut sigma = linalg::singular_values(z.matrix())?;
    let mut prev_objective = f64::INFINITY;
    let mut objective_trace = Vec::new();
    let mut iterate_delta_trace = Vec::new();
    let mut converged = false;
    let mut iterations_run = 0;

    while iterations_run < cfg.max_iters {
        let current = objective::objective_with_singulars(&z, ts, cfg, &sigma).total;
        if !current.is_finite() {
            return Err(LoreError::NonFiniteObjective {
                iteration: iterations_run,
            });
        }
        objective_trace.push(current);
        if (current - prev_objective).abs() < cfg.tol {
            converged = true;
            break;
        }

        let grad = objective::smoothed_loss_gradient(&z, ts, DISTANCE_EPS);
        let step = z.matrix() - grad * (loss_factor / cfg.mu);
        if step.iter().any(|x| !x.is_finite()) {
            return Err(LoreError::NonFiniteObjective {
                iteration: iterations_run,
            });
        }
        let (next, next_sigma, _) = threshold_step(&step, &sigma, cfg)?;
        let diff = &next - z.matrix();
        let delta_inf = diff.amax();
        iterate_delta_trace.push(diff.norm());
        iterations_run += 1;

        prev_objective = current;
        z = Embedding::new(next)?;
        sigma = next_sigma;
        if delta_inf < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        embedding: z,
        objective_trace,
        iterate_delta_trace,
        iterations_run,
        converged,
        wall_time_seconds: started.seconds(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(lambda: f64) -> SolverConfig {
        SolverConfig {
            lambda,
            p: 0.5,
            mu: 0.1,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn single_direction_threshold() {
        // Z = 4·e₁e₁ᵀ (σ_prev = 4), gradient chosen so the step has S = 6.
        let z = Embedding::from_row_slice(2, 1, &[4.0, 0.0]).unwrap();
        let grad = DMatrix::from_row_slice(2, 1, &[-0.2, 0.0]);
        let (next, rec) = svt_step(&z, &grad, &[4.0], &cfg(1.0)).unwrap();
        assert_relative_eq!(rec.shifted_singulars[0], 6.0, epsilon = 1e-12);
        assert_relative_eq!(rec.weights[0], 2.5, epsilon = 1e-12);
        assert_relative_eq!(next.matrix()[(0, 0)], 3.5, epsilon = 1e-12);
        assert_eq!(rec.kept_count, 1);
    }

    #[test]
    fn small_previous_singular_value_is_eliminated() {
        let z = Embedding::from_row_slice(2, 1, &[0.04, 0.0]).unwrap();
        let grad = DMatrix::from_row_slice(2, 1, &[-0.096, 0.0]);
        let (next, rec) = svt_step(&z, &grad, &[0.04], &cfg(1.0)).unwrap();
        assert_relative_eq!(rec.shifted_singulars[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(rec.weights[0], 25.0, epsilon = 1e-9);
        assert_eq!(rec.kept_count, 0);
        assert!(next.matrix().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_previous_singular_value_gets_infinite_weight() {
        let z = Embedding::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        // The step is diag(1, 0.5); its second direction pairs with σ_prev = 0.
        let grad = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -0.05]);
        let (next, rec) = svt_step(&z, &grad, &[1.0, 0.0], &cfg(0.01)).unwrap();
        assert!(rec.weights[1].is_infinite());
        assert_eq!(rec.kept_count, 1);
        assert!(next.matrix()[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_is_plain_gradient_step() {
        let z = init_embedding(6, 3, &SolverConfig::default());
        let grad = init_embedding(6, 3, &SolverConfig::default().with_seed(9)).into_matrix();
        let sigma = linalg::singular_values(z.matrix()).unwrap();
        let (next, rec) = svt_step(&z, &grad, &sigma, &cfg(0.0)).unwrap();
        let plain = z.matrix() - &grad * 10.0;
        assert!((next.matrix() - &plain).norm() / plain.norm() <= 1e-10);
        assert!(rec.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let z = Embedding::zeros(3, 2);
        let grad = DMatrix::zeros(2, 3);
        assert!(svt_step(&z, &grad, &[0.0, 0.0], &cfg(1.0)).is_err());
        assert!(svt_step(&z, &DMatrix::zeros(3, 2), &[0.0], &cfg(1.0)).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let c = SolverConfig::default();
        let a = init_embedding(50, 15, &c);
        assert_eq!(a.matrix().shape(), (50, 15));
        assert_eq!(a, init_embedding(50, 15, &c));
        assert_ne!(a, init_embedding(50, 15, &c.with_seed(1)));
    }

    #[test]
    fn empty_triplets_shrink_to_zero() {
        let ts = TripletSet::empty(8);
        let fit = fit_lore(&ts, 8, 4, &cfg(0.01)).unwrap();
        assert!(fit.converged);
        assert!(!fit.iterate_delta_trace.is_empty());
        assert_eq!(crate::metrics::measured_rank(&fit.embedding).unwrap(), 0);
        assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn unregularized_empty_set_stops_immediately() {
        let ts = TripletSet::empty(5);
        let c = cfg(0.0);
        let fit = fit_lore(&ts, 5, 3, &c).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iterations_run, 1);
        let start = init_embedding(5, 3, &c);
        assert!(linalg::max_abs_diff(fit.embedding.matrix(), start.matrix()) < 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        // 1/μ overflows, so the very first gradient step is non-finite.
        let ts = TripletSet::new(vec![crate::model::Triplet::new(0, 1, 2); 4], 3).unwrap();
        let c = SolverConfig {
            mu: 1e-320,
            lambda: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(
            fit_lore(&ts, 3, 2, &c),
            Err(LoreError::NonFiniteObjective { .. })
        ));
    }
}
