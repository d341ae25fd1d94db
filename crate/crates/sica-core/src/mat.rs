//! Dense row-major `f64` matrices and the small-matrix linear algebra the
//! rest of the crate needs: products, Gram matrices, a cyclic Jacobi
//! eigensolver for symmetric matrices, Gram-Schmidt orthonormalization, and
//! determinants.
//!
//! Sizes here are modest (component counts up to a few tens, Gram sides up
//! to a few hundred), so plain triple loops are both fast enough and easy to
//! audit.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};


/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "data length {} does not match {}x{}",
            data.len(),
            rows,
            cols
        );
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Mat { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `self * rhs`
    pub fn dot(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "dot: inner dimensions differ");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = rhs.row(k);
                let o_row = out.row_mut(i);
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// `self * rhsᵀ`
    pub fn dot_tr(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.cols, "dot_tr: inner dimensions differ");
        let mut out = Mat::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..rhs.rows {
                let b_row = rhs.row(j);
                let mut acc = 0.0;
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc += a * b;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `selfᵀ * rhs`
    pub fn tr_dot(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.rows, rhs.rows, "tr_dot: inner dimensions differ");
        let mut out = Mat::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = rhs.row(k);
            for (i, &aki) in a_row.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                let o_row = out.row_mut(i);
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += aki * b;
                }
            }
        }
        out
    }

    /// Gram matrix `self * selfᵀ`.
    pub fn gram(&self) -> Mat {
        let mut out = Mat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in i..self.rows {
                let b = self.row(j);
                let mut acc = 0.0;
                for (&x, &y) in a.iter().zip(b) {
                    acc += x * y;
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        out
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "sub: shapes differ");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Mat::from_vec(self.rows, self.cols, data)
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius distance to the identity, `‖self − I‖_F`.
    pub fn frob_dist_identity(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self[(i, j)] - if i == j { 1.0 } else { 0.0 };
                acc += d * d;
            }
        }
        acc.sqrt()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted descending
/// and eigenvectors as the corresponding columns. The input must be
/// symmetric; only its upper triangle is trusted.
pub fn eigh_sym(a: &Mat) -> (Vec<f64>, Mat) {
    assert_eq!(a.rows(), a.cols(), "eigh_sym: matrix must be square");
    let n = a.rows();
    let mut m = a.clone();
    // Symmetrize so rotations stay consistent under roundoff.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let mut v = Mat::identity(n);
    let scale = m.frob_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    (eigenvalues, vectors)
}

/// Orthonormalize the columns of `a` in place by modified Gram-Schmidt.
///
/// Panics if a column is (numerically) linearly dependent on the previous
/// ones; callers feed random Gaussian matrices where this has probability
/// zero.
pub fn orthonormalize_columns(a: &mut Mat) {
    let (n, k) = a.shape();
    assert!(k <= n);
    for j in 0..k {
        for prev in 0..j {
            let mut proj = 0.0;
            for i in 0..n {
                proj += a[(i, j)] * a[(i, prev)];
            }
            for i in 0..n {
                a[(i, j)] -= proj * a[(i, prev)];
            }
        }
        let mut norm = 0.0;
        for i in 0..n {
            norm += a[(i, j)] * a[(i, j)];
        }
        let norm = norm.sqrt();
        assert!(norm > 1e-12, "orthonormalize_columns: rank deficient input");
        for i in 0..n {
            a[(i, j)] /= norm;
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &Mat) -> f64 {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if m[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            det = -det;
        }
        det *= m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / m[(col, col)];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[(r, j)] -= f * m[(col, j)];
            }
        }
    }
    det
}

/// Symmetric inverse square root `a^{-1/2}` of a positive-definite matrix.
pub fn inv_sqrt_sym(a: &Mat) -> Mat {
    let n = a.rows();
    let (vals, vecs) = eigh_sym(a);
    let mut scaled = vecs.clone();
    for j in 0..n {
        let lam = vals[j].max(1e-14);
        let f = 1.0 / lam.sqrt();
        for i in 0..n {
            scaled[(i, j)] *= f;
        }
    }
    scaled.dot_tr(&vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dot_matches_hand_computed_product() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.dot(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transpose_products_agree() {
        let a = Mat::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 4.0, -1.0]);
        let b = Mat::from_vec(4, 3, vec![2.0, 1.0, 0.0, -1.0, 0.5, 2.0, 3.0, 3.0, 1.0, 0.0, 1.0, 1.0]);
        let direct = a.dot_tr(&b);
        let via_transpose = a.dot(&b.transpose());
        for i in 0..2 {
            for j in 0..4 {
                assert_abs_diff_eq!(direct[(i, j)], via_transpose[(i, j)], epsilon = 1e-12);
            }
        }
        let t1 = a.transpose().dot(&a);
        let t2 = a.tr_dot(&a);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(t1[(i, j)], t2[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigh_recovers_hand_built_spectrum() {
        // A = Q diag(5, 2, 1) Qᵀ for a known rotation Q.
        let q = {
            let mut g = Mat::from_vec(
                3,
                3,
                vec![1.0, 0.3, -0.2, 0.4, 1.0, 0.5, -0.3, 0.2, 1.0],
            );
            orthonormalize_columns(&mut g);
            g
        };
        let mut d = Mat::zeros(3, 3);
        d[(0, 0)] = 5.0;
        d[(1, 1)] = 2.0;
        d[(2, 2)] = 1.0;
        let a = q.dot(&d).dot_tr(&q);
        let (vals, vecs) = eigh_sym(&a);
        assert_abs_diff_eq!(vals[0], 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-10);
        // Reconstruction V diag(vals) Vᵀ == A.
        let mut vd = vecs.clone();
        for j in 0..3 {
            for i in 0..3 {
                vd[(i, j)] *= vals[j];
            }
        }
        let rec = vd.dot_tr(&vecs);
        assert!(rec.sub(&a).frob_norm() < 1e-10);
        // Orthonormal eigenvectors.
        assert!(vecs.tr_dot(&vecs).frob_dist_identity() < 1e-12);
    }

    #[test]
    fn eigh_handles_diagonal_and_repeated_eigenvalues() {
        let a = Mat::from_vec(2, 2, vec![3.0, 0.0, 0.0, 3.0]);
        let (vals, vecs) = eigh_sym(&a);
        assert_eq!(vals, vec![3.0, 3.0]);
        assert!(vecs.tr_dot(&vecs).frob_dist_identity() < 1e-12);
    }

    #[test]
    fn determinant_and_orthonormalization() {
        let mut g = Mat::from_vec(
            3,
            3,
            vec![0.2, 1.1, -0.4, 1.0, -0.3, 0.8, 0.5, 0.6, 1.2],
        );
        orthonormalize_columns(&mut g);
        let det = determinant(&g);
        assert_abs_diff_eq!(det.abs(), 1.0, epsilon = 1e-12);
        assert!(g.tr_dot(&g).frob_dist_identity() < 1e-12);

        let singular = Mat::from_vec(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(determinant(&singular), 0.0);
    }

    #[test]
    fn inv_sqrt_sym_squares_to_inverse() {
        let a = Mat::from_vec(2, 2, vec![4.0, 1.0, 1.0, 3.0]);
        let s = inv_sqrt_sym(&a);
        // s * a * s should be the identity.
        let prod = s.dot(&a).dot(&s);
        assert!(prod.frob_dist_identity() < 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn eigh_diagonalizes_random_symmetric_matrices(
                n in 2usize..8,
                seed in 0u64..1000,
            ) {
                let g = crate::rng::normal_matrix(n, n, seed);
                let a = g.gram(); // symmetric PSD
                let (vals, vecs) = eigh_sym(&a);
                // Sorted descending.
                for w in vals.windows(2) {
                    prop_assert!(w[0] >= w[1]);
                }
                // V diag(vals) Vᵀ reconstructs A.
                let mut vd = vecs.clone();
                for j in 0..n {
                    for i in 0..n {
                        vd[(i, j)] *= vals[j];
                    }
                }
                let err = vd.dot_tr(&vecs).sub(&a).frob_norm();
                prop_assert!(err < 1e-9 * a.frob_norm().max(1.0));
                prop_assert!(vecs.tr_dot(&vecs).frob_dist_identity() < 1e-10);
            }
        }
    }
}
