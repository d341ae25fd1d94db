//! Threshold calibration against the isotropy null hypothesis.
//!
//! The null states that all directions of the whitened feature space are
//! equivalent, so the null distribution of a component's values is the
//! distribution of projections of the pattern matrix onto random unit
//! directions. Two realizations are provided: the empirical null pools
//! `|ωᵀB|` over sampled directions, and the analytic null uses the
//! unit-variance Gaussian limit, whose survival function for τ ≥ 0 is
//! exactly `2(1 − Φ(τ))`.
//!
//! Thresholds control the per-voxel false-positive rate at the specified
//! p-value; no correction across voxels is applied.

use alloc::vec::Vec;

use crate::datamodel::{ComponentSet, DataError, NullKind, ThresholdResult};
use crate::mat::Mat;
use crate::rng;
use crate::stats;

/// Default number of sampled directions for the empirical null.
pub const DEFAULT_N_DIRECTIONS: usize = 1000;
/// Below this many directions the upper tail of the pooled sample is
/// considered unstable and the model carries a warning.
pub const MIN_STABLE_DIRECTIONS: usize = 50;
/// Row-variance slack accepted by `sample_null`: whitening guarantees unit
/// variance exactly, source estimates from a finite sample slightly less.
const VARIANCE_SLACK: f64 = 0.05;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NullError {
    #[error("n_directions must be positive")]
    ZeroDirections,
    #[error("row {row} has sample variance {variance:.4}, expected 1 (±{slack})")]
    NotUnitVariance {
        row: usize,
        variance: f64,
        slack: f64,
    },
    #[error("alpha must lie in (0, 0.5], got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("empirical null has {got} samples, fewer than the {needed} needed to resolve alpha")]
    TailNotResolvable { got: usize, needed: usize },
    #[error("direction vectors must have {expected} entries, got {got}")]
    DirectionDimension { expected: usize, got: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// A calibrated null distribution for component values.
#[derive(Debug, Clone)]
pub struct NullModel {
    kind: NullKind,
    /// Pooled `|ωᵀB|` samples, sorted ascending; present iff empirical.
    samples: Option<Vec<f64>>,
    n_directions: usize,
    seed: u64,
    tail_warning: bool,
}

impl NullModel {
    /// The analytic unit-variance Gaussian null.
    pub fn gaussian() -> Self {
        NullModel {
            kind: NullKind::Gaussian,
            samples: None,
            n_directions: 0,
            seed: 0,
            tail_warning: false,
        }
    }

    pub fn kind(&self) -> NullKind {
        self.kind
    }

    pub fn samples(&self) -> Option<&[f64]> {
        self.samples.as_deref()
    }

    pub fn n_directions(&self) -> usize {
        self.n_directions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True when the model was built from fewer than
    /// [`MIN_STABLE_DIRECTIONS`] directions and tail quantiles should not be
    /// trusted.
    pub fn tail_warning(&self) -> bool {
        self.tail_warning
    }

    /// Null probability of `|value| > tau` for `tau ≥ 0`.
    pub fn survival(&self, tau: f64) -> f64 {
        assert!(tau >= 0.0, "survival is defined for tau >= 0");
        match self.kind {
            NullKind::Gaussian => 2.0 * stats::norm_sf(tau),
            NullKind::Empirical => {
                let samples = self.samples.as_ref().expect("empirical null has samples");
                // Count of samples strictly above tau via binary search on
                // the sorted pool.
                let idx = samples.partition_point(|&s| s <= tau);
                (samples.len() - idx) as f64 / samples.len() as f64
            }
        }
    }
}

fn check_unit_variance(b: &ComponentSet) -> Result<(), NullError> {
    if b.whitened() {
        return Ok(());
    }
    for i in 0..b.n_components() {
        let v = stats::variance(b.patterns().row(i));
        if (v - 1.0).abs() > VARIANCE_SLACK {
            return Err(NullError::NotUnitVariance {
                row: i,
                variance: v,
                slack: VARIANCE_SLACK,
            });
        }
    }
    Ok(())
}

/// Sample the empirical isotropy null: pool `|ωᵀ patterns|` over
/// `n_directions` unit vectors drawn uniformly on the sphere.
///
/// Per-direction RNG streams are derived from `seed` in counter mode, so
/// the result does not depend on evaluation order. Fewer than
/// [`MIN_STABLE_DIRECTIONS`] directions is allowed but flags
/// [`NullModel::tail_warning`].
pub fn sample_null(
    b: &ComponentSet,
    n_directions: usize,
    seed: u64,
) -> Result<NullModel, NullError> {
    if n_directions == 0 {
        return Err(NullError::ZeroDirections);
    }
    check_unit_variance(b)?;
    let k = b.n_components();
    let mut directions = Mat::zeros(n_directions, k);
    for d in 0..n_directions {
        let mut dir_rng = rng::rng_from_seed(rng::derive_seed(seed, d as u64));
        let omega = rng::unit_direction(k, &mut dir_rng);
        for (j, &w) in omega.iter().enumerate() {
            directions[(d, j)] = w;
        }
    }
    let mut model = sample_null_with_directions(b, &directions)?;
    model.seed = seed;
    Ok(model)
}

/// Same as [`sample_null`] but with caller-provided unit directions, one
/// per row.
pub fn sample_null_with_directions(
    b: &ComponentSet,
    directions: &Mat,
) -> Result<NullModel, NullError> {
    if directions.rows() == 0 {
        return Err(NullError::ZeroDirections);
    }
    if directions.cols() != b.n_components() {
        return Err(NullError::DirectionDimension {
            expected: b.n_components(),
            got: directions.cols(),
        });
    }
    check_unit_variance(b)?;

    let projections = directions.dot(b.patterns());
    let mut samples: Vec<f64> = projections.into_data();
    for v in samples.iter_mut() {
        *v = v.abs();
    }
    samples.sort_unstable_by(f64::total_cmp);

    let n_directions = directions.rows();
    Ok(NullModel {
        kind: NullKind::Empirical,
        samples: Some(samples),
        n_directions,
        seed: 0,
        tail_warning: n_directions < MIN_STABLE_DIRECTIONS,
    })
}

/// Threshold whose null exceedance probability is `alpha`.
///
/// Gaussian null: `τ = Φ⁻¹(1 − α/2)`. Empirical null: the `(1 − α)`
/// quantile of the pooled samples, interpolated linearly between order
/// statistics. Nonincreasing in `alpha`.
pub fn threshold_for_pvalue(null: &NullModel, alpha: f64) -> Result<f64, NullError> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(NullError::AlphaOutOfRange { alpha });
    }
    match null.kind {
        NullKind::Gaussian => Ok(stats::norm_ppf(1.0 - alpha / 2.0)),
        NullKind::Empirical => {
            let samples = null.samples().expect("empirical null has samples");
            let needed = (10.0 / alpha) as usize;
            if samples.len() < needed {
                return Err(NullError::TailNotResolvable {
                    got: samples.len(),
                    needed,
                });
            }
            Ok(stats::quantile_sorted(samples, 1.0 - alpha).max(0.0))
        }
    }
}

/// Apply a two-sided threshold to component patterns: voxel `v` of
/// component `i` is retained iff `|patterns[i][v]| > tau`.
pub fn apply_threshold(
    b: &ComponentSet,
    tau: f64,
    alpha: f64,
    method: NullKind,
) -> Result<ThresholdResult, DataError> {
    ThresholdResult::new(b.patterns(), tau, alpha, method)
}
