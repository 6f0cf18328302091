//! Evaluation quantities: triplet accuracy, numerical rank, Tikhonov-aligned
//! Procrustes distance, PSNR and PCA axis orderings.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{LoreError, Result};
use crate::linalg;
use crate::model::{Embedding, PerceptualSpace, TripletSet};

pub const DEFAULT_ETA: f64 = 1e-3;

/// `Z` mapped into the frame of `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    #[serde(with = "crate::model::matrix_rows")]
    pub aligned: DMatrix<f64>,
    /// The `d' × d` least-squares map from centered `Z` to centered `P`.
    #[serde(with = "crate::model::matrix_rows")]
    pub projection: DMatrix<f64>,
    pub eta: f64,
}

/// Items sorted along one principal axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisOrdering {
    pub component_index: usize,
    pub item_order: Vec<usize>,
    /// Projection of every item (by item index) onto the axis.
    pub projections: Vec<f64>,
}

/// Fraction of triplets with `‖Z_a − Z_i‖ < ‖Z_a − Z_j‖`. Ties count as misses.
pub fn triplet_accuracy(z: &Embedding, ts: &TripletSet) -> Result<f64> {
    if ts.is_empty() {
        return Err(LoreError::EmptyTestSet);
    }
    ts.check_items(z.n_items())?;
    let satisfied = ts
        .iter()
        .filter(|t| z.distance(t.anchor, t.near) < z.distance(t.anchor, t.far))
        .count();
    Ok(satisfied as f64 / ts.len() as f64)
}

/// Singular values above `max(N, d') · ε · σ₁`.
pub fn measured_rank(z: &Embedding) -> Result<usize> {
    let s = linalg::singular_values(z.matrix())?;
    Ok(linalg::numerical_rank(&s, z.n_items(), z.ambient_dim()))
}

fn center(m: &DMatrix<f64>) -> (DMatrix<f64>, RowDVector<f64>) {
    let mean = m.row_mean();
    let mut c = m.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    (c, mean)
}

/// Tikhonov-regularized linear alignment of `Z` onto `P`:
/// `A = (Z_cᵀZ_c + ηI)⁻¹ Z_cᵀ P_c`, `aligned = Z_c A + 1 μ_Pᵀ`.
pub fn align_subspace(space: &PerceptualSpace, z: &Embedding, eta: f64) -> Result<AlignmentResult> {
    let p = space.matrix();
    if p.nrows() != z.n_items() {
        return Err(LoreError::ShapeMismatch(format!(
            "space has {} items, embedding has {}",
            p.nrows(),
            z.n_items()
        )));
    }
    if !(eta > 0.0) {
        return Err(LoreError::InvalidConfig(format!("eta must be positive, got {eta}")));
    }
    let (p_c, p_mean) = center(p);
    let (z_c, _) = center(z.matrix());
    let mut gram = z_c.transpose() * &z_c;
    for i in 0..gram.nrows() {
        gram[(i, i)] += eta;
    }
    let rhs = z_c.transpose() * &p_c;
    let projection = gram
        .cholesky()
        .ok_or_else(|| LoreError::InvalidConfig("alignment system is not positive definite".into()))?
        .solve(&rhs);
    let mut aligned = &z_c * &projection;
    for mut row in aligned.row_iter_mut() {
        row += &p_mean;
    }
    Ok(AlignmentResult {
        aligned,
        projection,
        eta,
    })
}

/// `‖P − Z_aligned‖_F / ‖Z_c‖_F`.
pub fn normalized_procrustes_distance(space: &PerceptualSpace, z: &Embedding, eta: f64) -> Result<f64> {
    let (z_c, _) = center(z.matrix());
    let scale = z_c.norm();
    if scale <= 1e-12 {
        return Err(LoreError::DegenerateEmbedding);
    }
    let alignment = align_subspace(space, z, eta)?;
    Ok((space.matrix() - &alignment.aligned).norm() / scale)
}

/// `20 log₁₀(max(Z_aligned) / ‖Z_aligned − P‖_F)` in decibels, where the peak
/// is the largest entry (not magnitude). Returns `+∞` for a perfect match.
pub fn psnr(space: &PerceptualSpace, z: &Embedding, eta: f64) -> Result<f64> {
    let alignment = align_subspace(space, z, eta)?;
    psnr_of_aligned(space, &alignment.aligned)
}

pub fn psnr_of_aligned(space: &PerceptualSpace, aligned: &DMatrix<f64>) -> Result<f64> {
    let err = (aligned - space.matrix()).norm();
    if err <= 1e-15 {
        return Ok(f64::INFINITY);
    }
    let peak = aligned.max();
    if !(peak > 0.0) {
        return Err(LoreError::NonPositivePeak);
    }
    Ok(20.0 * (peak / err).log10())
}

/// Top-`k` principal axes of the centered embedding with item orderings.
/// Each axis is signed so its largest-magnitude loading is positive.
pub fn principal_axes(z: &Embedding, k: usize) -> Result<Vec<AxisOrdering>> {
    let dims = z.ambient_dim();
    if k == 0 || k > dims {
        return Err(LoreError::InvalidConfig(format!("k must lie in [1, {dims}], got {k}")));
    }
    let (z_c, _) = center(z.matrix());
    // The centered matrix has at most min(N, d') right singular vectors.
    let decomposition = linalg::svd(&z_c)?;
    if k > decomposition.v_t.nrows() {
        return Err(LoreError::InvalidConfig(format!(
            "only {} principal axes exist for {} items",
            decomposition.v_t.nrows(),
            z.n_items()
        )));
    }
    let mut axes = Vec::with_capacity(k);
    for component_index in 0..k {
        let mut axis: DVector<f64> = decomposition.v_t.row(component_index).transpose();
        let lead = axis
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |best, (i, &v)| if v.abs() > best.1.abs() { (i, v) } else { best });
        if lead.1 < 0.0 {
            axis.neg_mut();
        }
        let projections: Vec<f64> = (&z_c * &axis).iter().copied().collect();
        let mut item_order: Vec<usize> = (0..projections.len()).collect();
        item_order.sort_by(|&a, &b| projections[a].total_cmp(&projections[b]).then(a.cmp(&b)));
        axes.push(AxisOrdering {
            component_index,
            item_order,
            projections,
        });
    }
    Ok(axes)
}
