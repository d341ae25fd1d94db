//! Signal-subspace estimation by truncated SVD, returning whitened
//! component patterns with unit-variance uncorrelated rows.
//!
//! The SVD is computed through the Gram matrix of the smaller side, which is
//! exact for the matrix sizes this crate targets and keeps the core free of
//! external linear algebra. Each time point's spatial mean is removed before
//! decomposition; that makes the whitened rows exactly zero-mean over voxels
//! and preserves the full row rank of component-shaped inputs.

use alloc::vec::Vec;


use crate::datamodel::{ComponentSet, DataError, Dataset};
use crate::mat::{self, Mat};

/// Relative eigenvalue cutoff below which a principal direction is treated
/// as numerically absent. 1e-10 of the leading eigenvalue keeps whitening
/// well conditioned while detecting exact low-rank inputs.
const RANK_REL_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WhitenError {
    #[error("n_components {requested} exceeds min(n_time, n_voxels) = {max}")]
    TooManyComponents { requested: usize, max: usize },
    #[error("n_components {requested} exceeds the achievable rank {achievable}")]
    RankDeficient { requested: usize, achievable: usize },
    #[error("input is degenerate (constant rows carry no signal)")]
    Degenerate,
    #[error("n_components must be positive")]
    ZeroComponents,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Result of a PCA fit: whitened component patterns, their loadings, the
/// singular spectrum, and the mean squared residual left in the discarded
/// directions.
#[derive(Debug, Clone)]
pub struct PcaFit {
    components: ComponentSet,
    singular_values: Vec<f64>,
    residual_variance: f64,
}

impl PcaFit {
    pub fn components(&self) -> &ComponentSet {
        &self.components
    }

    /// Loadings of the whitened patterns in the centered input,
    /// `n_time × n_components`; column `i` has norm `σ_i / √n_voxels`.
    pub fn loadings(&self) -> &Mat {
        self.components
            .loadings()
            .expect("PcaFit always stores loadings")
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn residual_variance(&self) -> f64 {
        self.residual_variance
    }

    pub fn n_components(&self) -> usize {
        self.components.n_components()
    }

    /// The linear map sending the centered input to the whitened patterns:
    /// `patterns = T · centered`, with `T` of shape
    /// `n_components × n_time`. Composing it with an unmixing rotation gives
    /// the total source-from-observation transform.
    pub fn whitening_transform(&self) -> Mat {
        let loadings = self.loadings();
        let n_time = loadings.rows();
        let k = self.n_components();
        let n_voxels = self.components.n_voxels() as f64;
        let mut t = Mat::zeros(k, n_time);
        for i in 0..k {
            // loadings column i = u_i σ_i / √n_v, so √n_v / σ_i · u_iᵀ
            // equals n_v / σ_i² times the column transposed.
            let f = n_voxels / (self.singular_values[i] * self.singular_values[i]);
            for t_idx in 0..n_time {
                t[(i, t_idx)] = f * loadings[(t_idx, i)];
            }
        }
        t
    }
}

/// Remove each row's mean (the spatial mean of every time point).
pub fn center_rows(data: &Mat) -> Mat {
    let mut z = data.clone();
    for i in 0..z.rows() {
        let row = z.row_mut(i);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        for v in row {
            *v -= mean;
        }
    }
    z
}

/// Fit a truncated PCA of `n_components` directions to the dataset and
/// whiten the retained patterns.
///
/// The returned patterns have exactly zero sample mean and unit sample
/// variance per row, pairwise uncorrelated; rows are sign-flipped so the
/// largest-magnitude entry of each is positive, making the output
/// deterministic.
pub fn fit_pca(y: &Dataset, n_components: usize) -> Result<PcaFit, WhitenError> {
    let data = y.data();
    let (n_time, n_voxels) = data.shape();
    if n_components == 0 {
        return Err(WhitenError::ZeroComponents);
    }
    let max = n_time.min(n_voxels);
    if n_components > max {
        return Err(WhitenError::TooManyComponents {
            requested: n_components,
            max,
        });
    }

    let z = center_rows(data);

    // Eigendecompose the smaller Gram matrix; both routes yield the same
    // left/right singular systems.
    let row_side = n_time <= n_voxels;
    let gram = if row_side {
        z.gram() // Z Zᵀ, n_time × n_time
    } else {
        z.tr_dot(&z) // Zᵀ Z, n_voxels × n_voxels
    };
    let (eigvals, eigvecs) = mat::eigh_sym(&gram);
    let lead = eigvals[0].max(0.0);
    if lead <= 0.0 || !lead.is_finite() {
        return Err(WhitenError::Degenerate);
    }
    let rank = eigvals
        .iter()
        .take_while(|&&l| l > lead * RANK_REL_TOL)
        .count();
    if n_components > rank {
        return Err(WhitenError::RankDeficient {
            requested: n_components,
            achievable: rank,
        });
    }

    let k = n_components;
    let singular_values: Vec<f64> = eigvals
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();

    // patterns = √n_v · Vᵀ, loadings = U S / √n_v.
    let sqrt_nv = (n_voxels as f64).sqrt();
    let mut patterns = Mat::zeros(k, n_voxels);
    let mut loadings = Mat::zeros(n_time, k);
    if row_side {
        // u_i = eigvecs column i; v_i = Zᵀ u_i / σ_i.
        for i in 0..k {
            let s = singular_values[i];
            for t in 0..n_time {
                let u = eigvecs[(t, i)];
                if u == 0.0 {
                    continue;
                }
                let zrow = z.row(t);
                let prow = patterns.row_mut(i);
                for (p, &zv) in prow.iter_mut().zip(zrow) {
                    *p += u * zv;
                }
            }
            let f = sqrt_nv / s;
            for p in patterns.row_mut(i) {
                *p *= f;
            }
            for t in 0..n_time {
                loadings[(t, i)] = eigvecs[(t, i)] * s / sqrt_nv;
            }
        }
    } else {
        // v_i = eigvecs column i; loadings column = Z v_i / √n_v.
        for i in 0..k {
            for (j, p) in patterns.row_mut(i).iter_mut().enumerate() {
                *p = eigvecs[(j, i)] * sqrt_nv;
            }
            for t in 0..n_time {
                let zrow = z.row(t);
                let mut acc = 0.0;
                for (j, &zv) in zrow.iter().enumerate() {
                    acc += zv * eigvecs[(j, i)];
                }
                loadings[(t, i)] = acc / sqrt_nv;
            }
        }
    }

    // Deterministic sign: largest-magnitude entry of each pattern positive.
    for i in 0..k {
        let row = patterns.row(i);
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = j;
            }
        }
        if row[best] < 0.0 {
            for v in patterns.row_mut(i) {
                *v = -*v;
            }
            for t in 0..n_time {
                loadings[(t, i)] = -loadings[(t, i)];
            }
        }
    }

    let residual_energy: f64 = eigvals.iter().skip(k).map(|&l| l.max(0.0)).sum();
    let residual_variance = residual_energy / (n_time as f64 * n_voxels as f64);

    let components = ComponentSet::new(patterns, Some(loadings), y.grid(), true)?;
    Ok(PcaFit {
        components,
        singular_values: singular_values[..k].to_vec(),
        residual_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Grid;
    use crate::rng;
    use crate::stats;
    use alloc::collections::BTreeMap;
    use approx::assert_abs_diff_eq;

    fn dataset(data: Mat) -> Dataset {
        Dataset::new(data, None, BTreeMap::new()).unwrap()
    }

    /// Orthonormal zero-mean rows for constructing known subspaces.
    fn orthonormal_rows(k: usize, n: usize, seed: u64) -> Mat {
        let raw = rng::normal_matrix(k, n, seed);
        let mut t = raw.transpose();
        for j in 0..t.cols() {
            let mut mean = 0.0;
            for i in 0..t.rows() {
                mean += t[(i, j)];
            }
            mean /= t.rows() as f64;
            for i in 0..t.rows() {
                t[(i, j)] -= mean;
            }
        }
        crate::mat::orthonormalize_columns(&mut t);
        t.transpose()
    }

    /// Frobenius distance between the projectors onto two row spaces; all
    /// principal angles below θ implies a distance below √(2k)·θ.
    fn projector_distance(a: &Mat, b: &Mat) -> f64 {
        let mut an = a.clone();
        let mut bn = b.clone();
        let mut ta = an.transpose();
        crate::mat::orthonormalize_columns(&mut ta);
        an = ta.transpose();
        let mut tb = bn.transpose();
        crate::mat::orthonormalize_columns(&mut tb);
        bn = tb.transpose();
        let pa = an.tr_dot(&an);
        let pb = bn.tr_dot(&bn);
        pa.sub(&pb).frob_norm()
    }

    /// Closed-form eigenvalues of a symmetric 3×3 matrix (trigonometric
    /// solution of the characteristic cubic), used as an independent oracle.
    fn eig3_closed_form(a: &Mat) -> [f64; 3] {
        let p1 = a[(0, 1)] * a[(0, 1)] + a[(0, 2)] * a[(0, 2)] + a[(1, 2)] * a[(1, 2)];
        let q = (a[(0, 0)] + a[(1, 1)] + a[(2, 2)]) / 3.0;
        let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2)
            + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = a.clone();
        for i in 0..3 {
            b[(i, i)] -= q;
        }
        b.scale(1.0 / p);
        let r = (crate::mat::determinant(&b) / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * core::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        [e1, e2, e3]
    }

    #[test]
    fn recovers_known_subspace_with_closed_form_oracle() {
        let p = orthonormal_rows(3, 400, 21);
        let mut y = Mat::zeros(3, 400);
        let scales = [3.0, 2.0, 1.0];
        for i in 0..3 {
            for j in 0..400 {
                y[(i, j)] = scales[i] * p[(i, j)];
            }
        }
        let fit = fit_pca(&dataset(y.clone()), 3).unwrap();

        // Oracle: closed-form spectrum of the 3×3 Gram matrix.
        let gram = center_rows(&y).gram();
        let eig = eig3_closed_form(&gram);
        for (i, &e) in eig.iter().enumerate() {
            assert_abs_diff_eq!(fit.singular_values()[i], e.max(0.0).sqrt(), epsilon = 1e-8);
        }
        assert_abs_diff_eq!(fit.singular_values()[0], 3.0, epsilon = 1e-10);

        // Same subspace: principal angles all < 1e-8.
        let d = projector_distance(fit.components().patterns(), &p);
        assert!(d < 3e-8, "projector distance {d}");
    }

    #[test]
    fn gaussian_noise_residual_tracks_discarded_share() {
        // For isotropic noise the residual variance approaches
        // total · (1 − k/n_time) as the aspect ratio shrinks.
        let n_time = 50;
        let n_voxels = 5000;
        let k = 5;
        let mut ratios = Vec::new();
        for seed in 0..20u64 {
            let y = rng::normal_matrix(n_time, n_voxels, 900 + seed);
            let total = stats::variance(y.data());
            let fit = fit_pca(&dataset(y), k).unwrap();
            ratios.push(fit.residual_variance() / (total * (1.0 - k as f64 / n_time as f64)));
        }
        let mean_ratio = stats::mean(&ratios);
        assert!(
            (mean_ratio - 1.0).abs() < 0.10,
            "residual share off by {mean_ratio}"
        );
    }

    #[test]
    fn exact_rank_two_input_has_zero_residual() {
        let p = orthonormal_rows(2, 300, 5);
        let l = rng::normal_matrix(8, 2, 6);
        let y = l.dot(&p);
        let fit = fit_pca(&dataset(y.clone()), 2).unwrap();
        assert!(fit.residual_variance() < 1e-16);

        // Reconstruction matches the centered input.
        let z = center_rows(&y);
        let rec = fit.loadings().dot(fit.components().patterns());
        let rel = rec.sub(&z).frob_norm() / z.frob_norm();
        assert!(rel < 1e-8, "relative reconstruction error {rel}");

        // Requesting more than the achievable rank names it.
        match fit_pca(&dataset(y), 3).unwrap_err() {
            WhitenError::RankDeficient { achievable, .. } => assert_eq!(achievable, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn degenerate_and_oversized_requests_error() {
        let constant = Mat::from_vec(4, 10, vec![2.5; 40]);
        assert_eq!(
            fit_pca(&dataset(constant), 1).unwrap_err(),
            WhitenError::Degenerate
        );

        let y = rng::normal_matrix(4, 10, 1);
        assert!(matches!(
            fit_pca(&dataset(y), 5).unwrap_err(),
            WhitenError::TooManyComponents { max: 4, .. }
        ));
    }

    #[test]
    fn whitening_and_loading_norms_hold_for_every_fit() {
        for seed in 0..5u64 {
            let y = rng::normal_matrix(12, 800, 40 + seed);
            let n_voxels = y.cols() as f64;
            let fit = fit_pca(&dataset(y), 6).unwrap();
            let patterns = fit.components().patterns();
            for i in 0..patterns.rows() {
                assert!(stats::mean(patterns.row(i)).abs() < 1e-10);
                assert_abs_diff_eq!(stats::variance(patterns.row(i)), 1.0, epsilon = 1e-9);
            }
            // Loadings column norms are σ_i / √n_v.
            let loadings = fit.loadings();
            for i in 0..fit.n_components() {
                let mut norm = 0.0;
                for t in 0..loadings.rows() {
                    norm += loadings[(t, i)] * loadings[(t, i)];
                }
                assert_abs_diff_eq!(
                    norm.sqrt(),
                    fit.singular_values()[i] / n_voxels.sqrt(),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let y = rng::normal_matrix(10, 600, 77);
        let fit = fit_pca(&dataset(y), 4).unwrap();
        let reconstruction = fit.loadings().dot(fit.components().patterns());
        let refit = fit_pca(&dataset(reconstruction), 4).unwrap();
        let d = projector_distance(
            fit.components().patterns(),
            refit.components().patterns(),
        );
        assert!(d < 3e-8, "projector distance {d}");
    }

    #[test]
    fn scaling_input_scales_spectrum_and_fixes_patterns() {
        let y = rng::normal_matrix(9, 500, 13);
        let mut y4 = y.clone();
        y4.scale(4.0);
        let a = fit_pca(&dataset(y), 5).unwrap();
        let b = fit_pca(&dataset(y4), 5).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(
                b.singular_values()[i],
                4.0 * a.singular_values()[i],
                epsilon = 1e-9
            );
        }
        let d = a
            .components()
            .patterns()
            .sub(b.components().patterns())
            .frob_norm();
        assert!(d < 1e-10, "patterns moved under scaling: {d}");
    }

    #[test]
    fn grid_propagates_to_components() {
        let y = rng::normal_matrix(6, 64, 3);
        let ds = Dataset::new(y, Some(Grid::new(8, 8)), BTreeMap::new()).unwrap();
        let fit = fit_pca(&ds, 3).unwrap();
        assert_eq!(fit.components().grid(), Some(Grid::new(8, 8)));
    }
}
