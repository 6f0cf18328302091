//! Domain types shared by every stage of the pipeline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LoreError, Result};
use crate::linalg;

/// Serialize a dense matrix as a list of rows.
pub(crate) mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(n, cols, rows.into_iter().flatten()))
    }
}

/// Ground-truth item coordinates, only known in simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptualSpace {
    #[serde(with = "matrix_rows")]
    matrix: DMatrix<f64>,
}

impl PerceptualSpace {
    /// Wraps `matrix`, requiring finite entries, `d ≤ N` and full column rank.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (n, d) = matrix.shape();
        if n == 0 || d == 0 {
            return Err(LoreError::ShapeMismatch("perceptual space must be non-empty".into()));
        }
        if d > n {
            return Err(LoreError::ShapeMismatch(format!(
                "intrinsic rank {d} exceeds item count {n}"
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(LoreError::ShapeMismatch("non-finite coordinate".into()));
        }
        let rank = linalg::numerical_rank(&linalg::singular_values(&matrix)?, n, d);
        if rank != d {
            return Err(LoreError::ShapeMismatch(format!(
                "space has {d} columns but numerical rank {rank}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_items(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn intrinsic_rank(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Learned coordinates `Z`, one row per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    #[serde(with = "matrix_rows")]
    matrix: DMatrix<f64>,
}

impl Embedding {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(LoreError::ShapeMismatch("embedding has non-finite entries".into()));
        }
        Ok(Self { matrix })
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LoreError::ShapeMismatch(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(rows, cols),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn n_items(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Euclidean distance between rows `x` and `y`.
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        row_distance(&self.matrix, x, y)
    }
}

pub(crate) fn row_distance(m: &DMatrix<f64>, x: usize, y: usize) -> f64 {
    (0..m.ncols())
        .map(|c| {
            let d = m[(x, c)] - m[(y, c)];
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// One comparison: `anchor` is closer to `near` than to `far`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: usize,
    pub near: usize,
    pub far: usize,
}

impl Triplet {
    pub const fn new(anchor: usize, near: usize, far: usize) -> Self {
        Self { anchor, near, far }
    }
}

impl From<(usize, usize, usize)> for Triplet {
    fn from((anchor, near, far): (usize, usize, usize)) -> Self {
        Self { anchor, near, far }
    }
}

/// Checks every triplet against `n_items`; reports the first offending position.
pub fn validate_triplet_set(triplets: &[Triplet], n_items: usize) -> Result<()> {
    for (position, t) in triplets.iter().enumerate() {
        if t.anchor >= n_items || t.near >= n_items || t.far >= n_items {
            return Err(LoreError::IndexOutOfRange { position, n_items });
        }
        if t.anchor == t.near || t.anchor == t.far || t.near == t.far {
            return Err(LoreError::DegenerateTriplet { position });
        }
    }
    Ok(())
}

/// An ordered, validated list of triplets over `n_items` items. Duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTripletSet")]
pub struct TripletSet {
    triplets: Vec<Triplet>,
    n_items: usize,
}

#[derive(Deserialize)]
struct RawTripletSet {
    triplets: Vec<Triplet>,
    n_items: usize,
}

impl TryFrom<RawTripletSet> for TripletSet {
    type Error = LoreError;

    fn try_from(raw: RawTripletSet) -> Result<Self> {
        TripletSet::new(raw.triplets, raw.n_items)
    }
}

impl TripletSet {
    pub fn new(triplets: Vec<Triplet>, n_items: usize) -> Result<Self> {
        validate_triplet_set(&triplets, n_items)?;
        Ok(Self { triplets, n_items })
    }

    pub fn empty(n_items: usize) -> Self {
        Self {
            triplets: Vec::new(),
            n_items,
        }
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triplet> {
        self.triplets.iter()
    }

    /// Subset by positions; indices are assumed in range.
    pub fn select(&self, positions: &[usize]) -> Self {
        Self {
            triplets: positions.iter().map(|&i| self.triplets[i]).collect(),
            n_items: self.n_items,
        }
    }

    pub(crate) fn check_items(&self, n_rows: usize) -> Result<()> {
        if self.n_items != n_rows {
            return Err(LoreError::ShapeMismatch(format!(
                "triplets index {} items but the embedding has {n_rows} rows",
                self.n_items
            )));
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a TripletSet {
    type Item = &'a Triplet;
    type IntoIter = std::slice::Iter<'a, Triplet>;

    fn into_iter(self) -> Self::IntoIter {
        self.triplets.iter()
    }
}

/// How the triplet loss is aggregated before the regularizer is added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossScale {
    /// Mean over triplets, so the gradient's Lipschitz constant does not grow with |T|.
    #[default]
    Mean,
    /// Plain sum over triplets.
    Sum,
}

/// Hyperparameters of the reweighted proximal solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda: f64,
    pub p: f64,
    pub mu: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub init_variance: f64,
    pub seed: u64,
    pub loss_scale: LossScale,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            p: 0.5,
            mu: 0.1,
            tol: 1e-5,
            max_iters: 1000,
            init_variance: 5.0,
            seed: 0,
            loss_scale: LossScale::Mean,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LoreError::InvalidConfig(msg));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be a finite non-negative number, got {}", self.lambda));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must lie in (0, 1], got {}", self.p));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.init_variance > 0.0 && self.init_variance.is_finite()) {
            return bad(format!("init_variance must be positive, got {}", self.init_variance));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub embedding: Embedding,
    /// Composite objective evaluated at every visited iterate.
    pub objective_trace: Vec<f64>,
    /// Frobenius norm of each step `Z^{k+1} - Z^k`.
    pub iterate_delta_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub wall_time_seconds: f64,
}

/// Evaluation summary of a learned embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub test_accuracy: f64,
    pub measured_rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub npd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr_db: Option<f64>,
    pub wall_time_seconds: f64,
}
