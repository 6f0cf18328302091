//! Dense SVD with a fixed ordering contract.
//!
//! Matrices are nalgebra `DMatrix` throughout the crate; the factorization
//! itself runs on faer, whose divide-and-conquer SVD stays accurate on the
//! exactly rank-deficient iterates the solver produces.

use nalgebra::{DMatrix, DVector};

use crate::error::{LoreError, Result};

/// Accepted relative reconstruction error of a factorization.
const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Thin SVD `M = U diag(s) Vᵀ` with `s` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl Svd {
    pub fn reconstruct_with(&self, values: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(values.len(), self.singular_values.len());
        let mut scaled_u = self.u.clone();
        for (mut col, &s) in scaled_u.column_iter_mut().zip(values) {
            col *= s;
        }
        scaled_u * &self.v_t
    }

    fn sorted(self) -> Self {
        let s = &self.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        if order.iter().enumerate().all(|(i, &j)| i == j) {
            return self;
        }
        Self {
            u: DMatrix::from_fn(self.u.nrows(), order.len(), |r, c| self.u[(r, order[c])]),
            singular_values: DVector::from_fn(order.len(), |i, _| s[order[i]]),
            v_t: DMatrix::from_fn(order.len(), self.v_t.ncols(), |r, c| self.v_t[(order[r], c)]),
        }
    }
}

/// Thin SVD with singular values sorted descending. The factorization is
/// checked against the input before it is returned.
pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(rows, k),
            singular_values: DVector::zeros(k),
            v_t: DMatrix::zeros(k, cols),
        });
    }
    let failure = LoreError::SvdFailure { rows, cols };
    let dense = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let raw = dense.thin_svd().map_err(|_| failure.clone())?;
    let (u, s, v) = (raw.U(), raw.S().column_vector(), raw.V());
    let decomposition = Svd {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
        singular_values: DVector::from_fn(k, |i, _| s[i]),
        v_t: DMatrix::from_fn(k, cols, |i, j| v[(j, i)]),
    };
    if decomposition.singular_values.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(failure);
    }
    let err = (decomposition.reconstruct_with(decomposition.singular_values.as_slice()) - m).norm();
    if !(err <= RECONSTRUCTION_TOL * m.norm().max(f64::MIN_POSITIVE)) {
        return Err(failure);
    }
    Ok(decomposition.sorted())
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values.iter().copied().collect())
}

/// Count of singular values above `max(rows, cols) · ε · σ₁`.
pub fn numerical_rank(sorted_desc: &[f64], rows: usize, cols: usize) -> usize {
    let Some(&top) = sorted_desc.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    let tol = rows.max(cols) as f64 * f64::EPSILON * top;
    sorted_desc.iter().filter(|&&s| s > tol).count()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 5.0, 0.0, 0.0]);
        let d = svd(&m).unwrap();
        assert_eq!(d.singular_values.as_slice(), &[5.0, 1.0]);
        let back = d.reconstruct_with(d.singular_values.as_slice());
        assert!(max_abs_diff(&back, &m) < 1e-14);
    }

    #[test]
    fn rank_tolerance() {
        assert_eq!(numerical_rank(&[1.0, 1e-18], 2, 2), 1);
        assert_eq!(numerical_rank(&[0.0, 0.0], 2, 2), 0);
        assert_eq!(numerical_rank(&[], 0, 0), 0);
        assert_eq!(numerical_rank(&[3.0, 2.0, 1.0], 3, 3), 3);
    }

    #[test]
    fn rank_one_iterate() {
        // Rank-one iterate that once broke an implicit-shift QR backend.
        let data = [
            -0.2093738340709676, -0.3069608099524585, 0.029232076856394777, 0.06058429065176605,
            0.358228371678495, -0.0688626060821426, -0.0938862988368273, 0.039519490395221984,
            -1.4572686390663594, -2.136486460932388, 0.20345899021538022, 0.4216744044385921,
            2.4933152415498765, -0.47929253764284846, -0.6534606367601135, 0.27506070297839036,
            -0.5294167480149858, -0.77617241186878, 0.07391540177743057, 0.15319172178306215,
            0.9058061167110766, -0.17412403576412397, -0.23739823667034088, 0.09992786434410064,
            -0.010608989317139963, -0.015553729376052079, 0.0014811917280083333, 0.0030698109683239185,
            0.018151460926800582, -0.003489273889058376, -0.004757226450025755, 0.0020024558144147845,
        ];
        let m = DMatrix::from_column_slice(8, 4, &data);
        let d = svd(&m).unwrap();
        assert!((d.singular_values[0] - 3.996_497_793_444_1).abs() < 1e-9);
        let back = d.reconstruct_with(d.singular_values.as_slice());
        assert!((back - &m).norm() < 1e-12);
    }

    #[test]
    fn zero_matrix_svd() {
        let m = DMatrix::<f64>::zeros(4, 3);
        let d = svd(&m).unwrap();
        assert!(d.singular_values.iter().all(|&s| s == 0.0));
        assert_eq!(d.u.shape(), (4, 3));
        assert_eq!(d.v_t.shape(), (3, 3));
    }
}
