//! Smoothed triplet loss, its gradient, the Schatten-p quasi-norm and the
//! composite objective `Ψ(Z) = f(Z) + λ Σ σᵢ(Z)ᵖ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;
use crate::model::{Embedding, LossScale, SolverConfig, Triplet, TripletSet};

/// Guard for normalizing a difference vector whose length is (near) zero.
pub const DISTANCE_EPS: f64 = 1e-12;

/// Above this margin `log(1 + e^m)` equals `m` to double precision.
const SOFTPLUS_LINEAR_CUTOFF: f64 = 30.0;

/// Loss, regularizer and their weighted sum at one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub loss: f64,
    pub regularizer: f64,
    pub lambda: f64,
    pub total: f64,
}

impl ObjectiveValue {
    pub fn new(loss: f64, regularizer: f64, lambda: f64) -> Self {
        Self {
            loss,
            regularizer,
            lambda,
            total: loss + lambda * regularizer,
        }
    }
}

pub fn softplus(m: f64) -> f64 {
    if m > SOFTPLUS_LINEAR_CUTOFF {
        m
    } else {
        m.exp().ln_1p()
    }
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Item-major copy of an embedding: row `x` of `Z` is `data[x*dim..(x+1)*dim]`.
struct Rows<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> Rows<'a> {
    fn row(&self, x: usize) -> &'a [f64] {
        &self.data[x * self.dim..(x + 1) * self.dim]
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn margin_rows(rows: &Rows<'_>, t: &Triplet) -> f64 {
    let a = rows.row(t.anchor);
    1.0 + dist(a, rows.row(t.near)) - dist(a, rows.row(t.far))
}

/// `1 + ‖Z_a − Z_i‖ − ‖Z_a − Z_j‖`.
pub fn triplet_margin(z: &Embedding, t: &Triplet) -> f64 {
    1.0 + z.distance(t.anchor, t.near) - z.distance(t.anchor, t.far)
}

/// `Σ_t softplus(margin_t)`; zero for an empty set.
pub fn smoothed_loss(z: &Embedding, ts: &TripletSet) -> f64 {
    assert_eq!(ts.n_items(), z.n_items(), "triplet set does not match embedding");
    let zt = z.matrix().transpose();
    let rows = Rows {
        data: zt.as_slice(),
        dim: z.ambient_dim(),
    };
    ts.iter().map(|t| softplus(margin_rows(&rows, t))).sum()
}

/// Gradient of [`smoothed_loss`]. Difference vectors shorter than `eps`
/// are normalized by `eps` instead of their length, so the gradient stays
/// finite when two rows coincide.
pub fn smoothed_loss_gradient(z: &Embedding, ts: &TripletSet, eps: f64) -> DMatrix<f64> {
    assert_eq!(ts.n_items(), z.n_items(), "triplet set does not match embedding");
    let dim = z.ambient_dim();
    let zt = z.matrix().transpose();
    let rows = Rows {
        data: zt.as_slice(),
        dim,
    };
    let mut grad_t = DMatrix::<f64>::zeros(dim, z.n_items());
    let g = grad_t.as_mut_slice();
    let mut u_near = vec![0.0; dim];
    let mut u_far = vec![0.0; dim];

    for t in ts {
        let a = rows.row(t.anchor);
        let i = rows.row(t.near);
        let j = rows.row(t.far);
        let d_near = dist(a, i);
        let d_far = dist(a, j);
        let s = sigmoid(1.0 + d_near - d_far);
        let inv_near = 1.0 / d_near.max(eps);
        let inv_far = 1.0 / d_far.max(eps);
        for c in 0..dim {
            u_near[c] = (a[c] - i[c]) * inv_near;
            u_far[c] = (a[c] - j[c]) * inv_far;
        }
        for c in 0..dim {
            g[t.anchor * dim + c] += s * (u_near[c] - u_far[c]);
            g[t.near * dim + c] -= s * u_near[c];
            g[t.far * dim + c] += s * u_far[c];
        }
    }
    grad_t.transpose()
}

/// Multiplier applied to the summed loss under `scale`.
pub fn loss_factor(scale: LossScale, n_triplets: usize) -> f64 {
    match scale {
        LossScale::Sum => 1.0,
        LossScale::Mean if n_triplets == 0 => 0.0,
        LossScale::Mean => 1.0 / n_triplets as f64,
    }
}

/// `Σᵢ σᵢᵖ` over already-computed singular values.
pub fn schatten_from_singulars(singulars: &[f64], p: f64) -> f64 {
    singulars
        .iter()
        .map(|&s| if s > 0.0 { s.powf(p) } else { 0.0 })
        .sum()
}

/// `Σᵢ σᵢ(Z)ᵖ` over all `min(N, d')` singular values.
pub fn schatten_quasi_norm(z: &Embedding, p: f64) -> Result<f64> {
    Ok(schatten_from_singulars(&linalg::singular_values(z.matrix())?, p))
}

/// Composite objective under `cfg` (λ, p and loss scaling).
pub fn objective(z: &Embedding, ts: &TripletSet, cfg: &SolverConfig) -> Result<ObjectiveValue> {
    let singulars = linalg::singular_values(z.matrix())?;
    Ok(objective_with_singulars(z, ts, cfg, &singulars))
}

pub(crate) fn objective_with_singulars(
    z: &Embedding,
    ts: &TripletSet,
    cfg: &SolverConfig,
    singulars: &[f64],
) -> ObjectiveValue {
    let loss = loss_factor(cfg.loss_scale, ts.len()) * smoothed_loss(z, ts);
    ObjectiveValue::new(loss, schatten_from_singulars(singulars, cfg.p), cfg.lambda)
}
