//! Row-space / null-space operations for a short, wide Jacobian via a thin SVD.

use nalgebra::SVD;

use crate::problem::{Matrix, Vector};

/// Thin SVD `J = U diag(sigma) V^T` restricted to the numerically nonzero
/// singular values.
#[derive(Debug, Clone)]
pub(crate) struct RowSpace {
    u: Matrix,
    sigma: Vector,
    vt: Matrix,
    sigma_max: f64,
    sigma_min: f64,
    full_rank: bool,
}

impl RowSpace {
    /// `rank_tol` is relative: singular values `<= rank_tol * sigma_max` are dropped.
    pub(crate) fn new(jac: &Matrix, rank_tol: f64) -> Self {
        let m = jac.nrows();
        let svd = SVD::new(jac.clone(), true, true);
        let u_full = svd.u.expect("SVD computed with U");
        let vt_full = svd.v_t.expect("SVD computed with V^T");
        let sv = svd.singular_values;

        let sigma_max = sv.iter().copied().fold(0.0, f64::max);
        // a wide matrix has at most min(m, n) singular values; missing ones are zero
        let sigma_min = if sv.len() < m {
            0.0
        } else {
            sv.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let keep: Vec<usize> = (0..sv.len())
            .filter(|&i| sigma_max > 0.0 && sv[i] > rank_tol * sigma_max)
            .collect();
        let full_rank = keep.len() == m;

        let u = u_full.select_columns(&keep);
        let vt = vt_full.select_rows(&keep);
        let sigma = Vector::from_iterator(keep.len(), keep.iter().map(|&i| sv[i]));
        Self {
            u,
            sigma,
            vt,
            sigma_max,
            sigma_min,
            full_rank,
        }
    }

    pub(crate) fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub(crate) fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub(crate) fn is_full_rank(&self) -> bool {
        self.full_rank
    }

    /// `J^+ b`: the minimum-norm solution of `J v = b` (least squares when
    /// `b` is outside the range).
    pub(crate) fn pinv_apply(&self, b: &Vector) -> Vector {
        let coeff = (self.u.transpose() * b).component_div(&self.sigma);
        self.vt.transpose() * coeff
    }

    /// `(J^T)^+ h`: the least-squares solution of `J^T y = h`.
    pub(crate) fn pinv_transpose_apply(&self, h: &Vector) -> Vector {
        let coeff = (&self.vt * h).component_div(&self.sigma);
        &self.u * coeff
    }

    /// Component of `x` orthogonal to the row space of `J`.
    pub(crate) fn project_null(&self, x: &Vector) -> Vector {
        let coeff = &self.vt * x;
        x - self.vt.transpose() * coeff
    }

    /// `V^T x` for the retained right singular vectors.
    pub(crate) fn row_coordinates(&self, x: &Vector) -> Vector {
        &self.vt * x
    }

    pub(crate) fn sigma(&self) -> &Vector {
        &self.sigma
    }

    pub(crate) fn left_vectors(&self) -> &Matrix {
        &self.u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_inverse_of_wide_matrix() {
        let j = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
        let rs = RowSpace::new(&j, 1e-10);
        assert!(rs.is_full_rank());
        let b = Vector::from_vec(vec![1.0, -2.0]);
        let v = rs.pinv_apply(&b);
        assert!((&j * &v - &b).norm() < 1e-12);
        // minimum norm: v has no null-space component
        assert!(rs.project_null(&v).norm() < 1e-12);
    }

    #[test]
    fn duplicated_rows_are_rank_deficient() {
        let j = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let rs = RowSpace::new(&j, 1e-10);
        assert!(!rs.is_full_rank());
        assert!(rs.sigma_min() < 1e-12);
        let rs = RowSpace::new(&Matrix::zeros(2, 3), 1e-10);
        assert!(!rs.is_full_rank());
        assert_eq!(rs.sigma_max(), 0.0);
    }
}
