//! Core dataset/component types shared by every stage of the pipeline,
//! with their invariants enforced at construction.
//!
//! All types are immutable after construction and safe to share across
//! threads. Matrices are dense row-major `f64` throughout; spatial maps are
//! flattened row-major from `(height, width)` grids, and that flattening
//! order is part of the on-disk format contract.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::mat::Mat;
use crate::stats;

/// Tolerance for a whitened row's sample mean.
pub const WHITEN_MEAN_TOL: f64 = 1e-8;
/// Tolerance for a whitened row's sample variance deviation from 1.
pub const WHITEN_VAR_TOL: f64 = 1e-6;
/// Tolerance for pairwise correlations between whitened rows.
pub const WHITEN_CORR_TOL: f64 = 1e-6;
/// Tolerance for `MᵀM = I` of a mixing matrix, in Frobenius norm.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DataError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("grid {height}x{width} does not match {n_voxels} voxels")]
    GridMismatch {
        height: usize,
        width: usize,
        n_voxels: usize,
    },
    #[error("need at least {min} {what}, got {got}")]
    TooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: &'static str },
    #[error("whitened flag set but row {row} fails the check: {what}")]
    NotWhitened { row: usize, what: &'static str },
    #[error("mixing matrix is not orthogonal: |MᵀM - I| = {deviation:.3e}")]
    NotOrthogonal { deviation: f64 },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("alpha must lie in (0, 1), got {alpha}")]
    BadAlpha { alpha: f64 },
    #[error("threshold must be nonnegative, got {tau}")]
    BadTau { tau: f64 },
}

/// Spatial shape of flattened voxel maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
}

impl Grid {
    pub fn new(height: usize, width: usize) -> Self {
        Grid { height, width }
    }

    pub fn n_voxels(&self) -> usize {
        self.height * self.width
    }
}

/// Dense boolean matrix, used for per-component voxel supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMat {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BoolMat {
    pub fn new(rows: usize, cols: usize) -> Self {
        BoolMat {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), rows * cols);
        BoolMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// 0.0/1.0 encoding, the form the supports travel in on disk.
    pub fn to_mat(&self) -> Mat {
        Mat::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }

    /// Inverse of [`BoolMat::to_mat`]; any nonzero entry counts as true.
    pub fn from_mat(m: &Mat) -> Self {
        BoolMat {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|&v| v != 0.0).collect(),
        }
    }
}

/// Observed signal matrix (time × voxels) with optional spatial layout and
/// free-form provenance metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    data: Mat,
    grid: Option<Grid>,
    meta: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(
        data: Mat,
        grid: Option<Grid>,
        meta: BTreeMap<String, String>,
    ) -> Result<Self, DataError> {
        if !data.is_finite() {
            return Err(DataError::NonFinite);
        }
        if data.rows() < 2 {
            return Err(DataError::TooSmall {
                what: "time points",
                min: 2,
                got: data.rows(),
            });
        }
        if data.cols() < 2 {
            return Err(DataError::TooSmall {
                what: "voxels",
                min: 2,
                got: data.cols(),
            });
        }
        if let Some(g) = grid {
            if g.n_voxels() != data.cols() {
                return Err(DataError::GridMismatch {
                    height: g.height,
                    width: g.width,
                    n_voxels: data.cols(),
                });
            }
        }
        Ok(Dataset { data, grid, meta })
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    pub fn grid(&self) -> Option<Grid> {
        self.grid
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn n_time(&self) -> usize {
        self.data.rows()
    }

    pub fn n_voxels(&self) -> usize {
        self.data.cols()
    }
}

/// Component patterns (components × voxels), optionally with their loadings
/// in the observed signal.
///
/// The `whitened` flag is verified, not trusted: construction with
/// `whitened = true` recomputes row means, row variances, and pairwise row
/// correlations and rejects patterns that fail the tolerances.
#[derive(Debug, Clone)]
pub struct ComponentSet {
    patterns: Mat,
    loadings: Option<Mat>,
    grid: Option<Grid>,
    whitened: bool,
}

impl ComponentSet {
    pub fn new(
        patterns: Mat,
        loadings: Option<Mat>,
        grid: Option<Grid>,
        whitened: bool,
    ) -> Result<Self, DataError> {
        if !patterns.is_finite() {
            return Err(DataError::NonFinite);
        }
        if let Some(l) = &loadings {
            if !l.is_finite() {
                return Err(DataError::NonFinite);
            }
            if l.cols() != patterns.rows() {
                return Err(DataError::DimensionMismatch {
                    context: "loadings columns must match pattern rows",
                });
            }
        }
        if let Some(g) = grid {
            if g.n_voxels() != patterns.cols() {
                return Err(DataError::GridMismatch {
                    height: g.height,
                    width: g.width,
                    n_voxels: patterns.cols(),
                });
            }
        }
        if whitened {
            verify_whitened(&patterns)?;
        }
        Ok(ComponentSet {
            patterns,
            loadings,
            grid,
            whitened,
        })
    }

    pub fn patterns(&self) -> &Mat {
        &self.patterns
    }

    pub fn loadings(&self) -> Option<&Mat> {
        self.loadings.as_ref()
    }

    pub fn grid(&self) -> Option<Grid> {
        self.grid
    }

    pub fn whitened(&self) -> bool {
        self.whitened
    }

    pub fn n_components(&self) -> usize {
        self.patterns.rows()
    }

    pub fn n_voxels(&self) -> usize {
        self.patterns.cols()
    }
}

fn verify_whitened(patterns: &Mat) -> Result<(), DataError> {
    let k = patterns.rows();
    for i in 0..k {
        let row = patterns.row(i);
        if stats::mean(row).abs() > WHITEN_MEAN_TOL {
            return Err(DataError::NotWhitened {
                row: i,
                what: "sample mean not 0",
            });
        }
        if (stats::variance(row) - 1.0).abs() > WHITEN_VAR_TOL {
            return Err(DataError::NotWhitened {
                row: i,
                what: "sample variance not 1",
            });
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if stats::pearson(patterns.row(i), patterns.row(j)).abs() > WHITEN_CORR_TOL {
                return Err(DataError::NotWhitened {
                    row: j,
                    what: "rows correlated",
                });
            }
        }
    }
    Ok(())
}

/// Orthogonal mixing matrix between unmixed sources and observed whitened
/// components.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    m: Mat,
}

impl MixingMatrix {
    pub fn new(m: Mat) -> Result<Self, DataError> {
        if m.rows() != m.cols() {
            return Err(DataError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if !m.is_finite() {
            return Err(DataError::NonFinite);
        }
        let deviation = m.tr_dot(&m).frob_dist_identity();
        if deviation > ORTHOGONALITY_TOL {
            return Err(DataError::NotOrthogonal { deviation });
        }
        Ok(MixingMatrix { m })
    }

    pub fn mat(&self) -> &Mat {
        &self.m
    }

    pub fn order(&self) -> usize {
        self.m.rows()
    }
}

/// Which null distribution a threshold came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullKind {
    Empirical,
    Gaussian,
}

impl NullKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullKind::Empirical => "empirical",
            NullKind::Gaussian => "gaussian",
        }
    }
}

/// Per-component binary supports produced by thresholding component
/// patterns at `tau`, together with the specified p-value.
#[derive(Debug, Clone)]
pub struct ThresholdResult {
    alpha: f64,
    tau: f64,
    supports: BoolMat,
    method: NullKind,
}

impl ThresholdResult {
    /// Builds the supports from the patterns, so `supports[i][v] ⇔
    /// |patterns[i][v]| > tau` holds by construction.
    pub fn new(patterns: &Mat, tau: f64, alpha: f64, method: NullKind) -> Result<Self, DataError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DataError::BadAlpha { alpha });
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(DataError::BadTau { tau });
        }
        let mut supports = BoolMat::new(patterns.rows(), patterns.cols());
        for i in 0..patterns.rows() {
            for (j, &v) in patterns.row(i).iter().enumerate() {
                supports.set(i, j, v.abs() > tau);
            }
        }
        Ok(ThresholdResult {
            alpha,
            tau,
            supports,
            method,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn supports(&self) -> &BoolMat {
        &self.supports
    }

    pub fn method(&self) -> NullKind {
        self.method
    }

    /// Fraction of voxel decisions that selected, pooled over components.
    pub fn selected_fraction(&self) -> f64 {
        let total = self.supports.rows() * self.supports.cols();
        self.supports.count_true() as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn dataset_rejects_bad_inputs() {
        let m = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, f64::NAN]);
        assert_eq!(
            Dataset::new(m, None, BTreeMap::new()).unwrap_err(),
            DataError::NonFinite
        );

        let m = Mat::from_vec(2, 3, vec![1.0; 6]);
        assert!(matches!(
            Dataset::new(m, Some(Grid::new(2, 2)), BTreeMap::new()).unwrap_err(),
            DataError::GridMismatch { .. }
        ));

        let m = Mat::from_vec(1, 3, vec![1.0; 3]);
        assert!(matches!(
            Dataset::new(m, None, BTreeMap::new()).unwrap_err(),
            DataError::TooSmall { .. }
        ));
    }

    #[test]
    fn whitened_flag_is_verified_not_trusted() {
        // i.i.d. Gaussian rows are close to white but not within tolerance.
        let m = rng::normal_matrix(3, 500, 11);
        let err = ComponentSet::new(m, None, None, true).unwrap_err();
        assert!(matches!(err, DataError::NotWhitened { .. }));

        // Exactly whitened rows pass: orthogonalize, center, rescale.
        let raw = rng::normal_matrix(3, 500, 12);
        let mut t = raw.transpose();
        // Center columns (= rows of the pattern matrix).
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
        let mut white = t.transpose();
        let scale = (white.cols() as f64).sqrt();
        white.scale(scale);
        assert!(ComponentSet::new(white, None, None, true).is_ok());
    }

    #[test]
    fn mixing_matrix_requires_orthogonality() {
        let q = rng::random_orthogonal(4, 5, true);
        assert!(MixingMatrix::new(q).is_ok());
        let skew = Mat::from_vec(2, 2, vec![1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(
            MixingMatrix::new(skew).unwrap_err(),
            DataError::NotOrthogonal { .. }
        ));
    }

    #[test]
    fn threshold_result_matches_definition() {
        let patterns = Mat::from_vec(1, 3, vec![3.0, 0.5, -2.5]);
        let r = ThresholdResult::new(&patterns, 2.0, 0.05, NullKind::Gaussian).unwrap();
        assert_eq!(r.supports().row(0), &[true, false, true]);

        let zeros = Mat::zeros(2, 4);
        let r = ThresholdResult::new(&zeros, 0.5, 0.01, NullKind::Empirical).unwrap();
        assert_eq!(r.supports().count_true(), 0);

        assert!(ThresholdResult::new(&zeros, -1.0, 0.05, NullKind::Gaussian).is_err());
        assert!(ThresholdResult::new(&zeros, 1.0, 1.5, NullKind::Gaussian).is_err());
    }
}
