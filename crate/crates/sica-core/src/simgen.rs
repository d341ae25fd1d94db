//! Ground-truthed synthetic data: sparse rectangle sources on a 2-D grid,
//! smoothed Gaussian and cubed super-Gaussian noise fields with controlled
//! variance and kurtosis, mixed by a random rotation.
//!
//! Everything is driven by a single seed through derived per-stream
//! sub-seeds, so identical configs produce bit-identical outputs.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::datamodel::{BoolMat, ComponentSet, DataError, Grid, MixingMatrix};
use crate::mat::Mat;
use crate::rng;
use crate::stats;

const STREAM_SOURCES: u64 = 0x5153;
const STREAM_MIXING: u64 = 0x4d49;
const STREAM_NOISE_G: u64 = 0x4e47;
const STREAM_NOISE_NG: u64 = 0x4e4e;
const STREAM_THETA: u64 = 0x5448;

/// Rectangle side lengths are drawn uniformly from this range (pixels).
pub const RECT_SIDE_MIN: usize = 8;
pub const RECT_SIDE_MAX: usize = 24;
const PLACEMENT_ATTEMPTS: usize = 100;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("{field} must be {requirement}, got {got}")]
    BadConfig {
        field: &'static str,
        requirement: &'static str,
        got: f64,
    },
    #[error("grid {height}x{width} too small: sides must reach {min} pixels")]
    GridTooSmall {
        height: usize,
        width: usize,
        min: usize,
    },
    #[error("could not place a non-overlapping rectangle after {attempts} attempts (grid too small)")]
    PlacementFailed { attempts: usize },
    #[error("target kurtosis {target} outside the achievable range [{lo:.2}, {hi:.2}]")]
    KurtosisOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Configuration of one synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub n_sources: usize,
    pub rect_amplitude: f64,
    /// Noise standard deviation after smoothing and standardization.
    pub sigma: f64,
    /// Gaussian/super-Gaussian balance, radians in [0, π/2].
    pub theta: f64,
    /// When set, `theta` is solved so the mixed noise reaches this kurtosis.
    pub target_kurtosis: Option<f64>,
    /// Full width at half maximum of the smoothing kernel, in pixels.
    pub fwhm: f64,
    /// Whether the source maps are smoothed with the same kernel as the
    /// noise (the scanner point-spread model). Disable for exactly separable
    /// fixtures.
    pub smooth_sources: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid: Grid::new(80, 80),
            n_sources: 9,
            rect_amplitude: 1.0,
            sigma: 0.15,
            theta: 0.0,
            target_kurtosis: None,
            fwhm: 2.0,
            smooth_sources: true,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(SimError::BadConfig {
                field: "sigma",
                requirement: "nonnegative",
                got: self.sigma,
            });
        }
        if !(self.theta >= 0.0 && self.theta <= core::f64::consts::FRAC_PI_2) {
            return Err(SimError::BadConfig {
                field: "theta",
                requirement: "in [0, pi/2]",
                got: self.theta,
            });
        }
        if !(self.fwhm > 0.0) || !self.fwhm.is_finite() {
            return Err(SimError::BadConfig {
                field: "fwhm",
                requirement: "positive",
                got: self.fwhm,
            });
        }
        if !(self.rect_amplitude >= 0.0) || !self.rect_amplitude.is_finite() {
            return Err(SimError::BadConfig {
                field: "rect_amplitude",
                requirement: "nonnegative",
                got: self.rect_amplitude,
            });
        }
        if self.n_sources == 0 {
            return Err(SimError::BadConfig {
                field: "n_sources",
                requirement: "positive",
                got: 0.0,
            });
        }
        if let Some(k) = self.target_kurtosis {
            if !(k >= 3.0) {
                return Err(SimError::BadConfig {
                    field: "target_kurtosis",
                    requirement: "at least 3",
                    got: k,
                });
            }
        }
        if self.grid.height < 8 || self.grid.width < 8 {
            return Err(SimError::GridTooSmall {
                height: self.grid.height,
                width: self.grid.width,
                min: 8,
            });
        }
        Ok(())
    }
}

/// Ground truth of one simulated dataset.
#[derive(Debug, Clone)]
pub struct SimTruth {
    /// Raw rectangle maps (n_sources × n_voxels), amplitude inside, 0 outside.
    pub sources: Mat,
    /// Sources after the point-spread smoothing (equal to `sources` when
    /// `smooth_sources` is off).
    pub sources_smoothed: Mat,
    /// True where the raw source is nonzero.
    pub supports: BoolMat,
    pub mixing: MixingMatrix,
    /// Observed patterns `M·Ã + σ(cosθ·M·E_g + sinθ·E_ng)`.
    pub observed: ComponentSet,
    /// Per-component smoothed, standardized Gaussian fields (mixed through
    /// `mixing` in the observation).
    pub noise_gaussian: Mat,
    /// Per-component super-Gaussian fields (added unrotated).
    pub noise_super: Mat,
    /// The Gaussian/super-Gaussian angle actually used (solved when
    /// `target_kurtosis` was set).
    pub theta: f64,
    pub config: SimConfig,
}

/// Standard deviation of the Gaussian kernel for a given FWHM.
pub fn kernel_std(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * core::f64::consts::LN_2).sqrt())
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push((-d * d / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= sum;
    }
    kernel
}

/// Separable wrap-around convolution of a flattened (height × width) map
/// with an isotropic Gaussian kernel of the given standard deviation.
pub fn smooth_map(map: &mut [f64], grid: Grid, sigma: f64) {
    let kernel = gaussian_kernel(sigma);
    let radius = kernel.len() / 2;
    let (h, w) = (grid.height, grid.width);
    debug_assert_eq!(map.len(), h * w);

    let mut scratch = vec![0.0f64; h * w];
    // Rows.
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let cc = (c + w + k - radius) % w;
                acc += kv * map[r * w + cc];
            }
            scratch[r * w + c] = acc;
        }
    }
    // Columns.
    for c in 0..w {
        for r in 0..h {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let rr = (r + h + k - radius) % h;
                acc += kv * scratch[rr * w + c];
            }
            map[r * w + c] = acc;
        }
    }
}

/// Smoothed standardized Gaussian random field: i.i.d. standard normal
/// pixels convolved with an isotropic Gaussian kernel of std
/// `fwhm / (2√(2 ln 2))`, then standardized to sample mean 0, variance 1.
pub fn gaussian_field(grid: Grid, fwhm: f64, seed: u64) -> Vec<f64> {
    let mut map = rng::normal_vec(grid.n_voxels(), seed);
    smooth_map(&mut map, grid, kernel_std(fwhm));
    stats::standardize(&mut map);
    map
}

/// Super-Gaussian field: a smoothed Gaussian field cubed pixel-wise, then
/// standardized. The cubing produces spiky, long-tailed noise.
pub fn supergaussian_field(grid: Grid, fwhm: f64, seed: u64) -> Vec<f64> {
    let mut map = gaussian_field(grid, fwhm, seed);
    for v in map.iter_mut() {
        *v = *v * *v * *v;
    }
    stats::standardize(&mut map);
    map
}

#[derive(Debug, Clone, Copy)]
struct RectSpec {
    top: usize,
    left: usize,
    height: usize,
    width: usize,
}

impl RectSpec {
    fn overlaps(&self, other: &RectSpec) -> bool {
        self.top < other.top + other.height
            && other.top < self.top + self.height
            && self.left < other.left + other.width
            && other.left < self.left + self.width
    }
}

/// Sparse source maps: each source holds 1 or 2 axis-aligned rectangles of
/// uniform amplitude on a zero background. Rectangles within one source do
/// not overlap; distinct sources may.
pub fn make_sources(config: &SimConfig) -> Result<(Mat, BoolMat), SimError> {
    config.validate()?;
    let grid = config.grid;
    let (h, w) = (grid.height, grid.width);
    let n_voxels = grid.n_voxels();
    let side_max_h = RECT_SIDE_MAX.min(h);
    let side_max_w = RECT_SIDE_MAX.min(w);

    let mut rng = rng::rng_from_seed(rng::derive_seed(config.seed, STREAM_SOURCES));
    let mut sources = Mat::zeros(config.n_sources, n_voxels);
    let mut supports = BoolMat::new(config.n_sources, n_voxels);

    for i in 0..config.n_sources {
        let n_rects = 1 + rng.random_range(0..2usize);
        let mut placed: Vec<RectSpec> = Vec::new();
        for _ in 0..n_rects {
            let mut attempt = 0;
            let rect = loop {
                attempt += 1;
                if attempt > PLACEMENT_ATTEMPTS {
                    return Err(SimError::PlacementFailed {
                        attempts: PLACEMENT_ATTEMPTS,
                    });
                }
                let rect = RectSpec {
                    height: rng.random_range(RECT_SIDE_MIN..=side_max_h),
                    width: rng.random_range(RECT_SIDE_MIN..=side_max_w),
                    top: 0,
                    left: 0,
                };
                let rect = RectSpec {
                    top: rng.random_range(0..=h - rect.height),
                    left: rng.random_range(0..=w - rect.width),
                    ..rect
                };
                if placed.iter().all(|p| !p.overlaps(&rect)) {
                    break rect;
                }
            };
            for r in rect.top..rect.top + rect.height {
                for c in rect.left..rect.left + rect.width {
                    sources[(i, r * w + c)] = config.rect_amplitude;
                    if config.rect_amplitude != 0.0 {
                        supports.set(i, r * w + c, true);
                    }
                }
            }
            placed.push(rect);
        }
    }
    Ok((sources, supports))
}

/// Solve for the mixing angle θ at which `cosθ·E_g + sinθ·E_ng` reaches the
/// target sample kurtosis, estimated on a tiled field of at least 10⁶
/// pixels. Bisection against a fixed seeded pair of tiled fields, so the
/// result is deterministic.
pub fn solve_theta(
    target_kurtosis: f64,
    fwhm: f64,
    grid: Grid,
    seed: u64,
) -> Result<f64, SimError> {
    const MIN_PIXELS: usize = 1_000_000;
    const TOL: f64 = 0.1;

    if !(target_kurtosis >= 3.0) {
        return Err(SimError::BadConfig {
            field: "target_kurtosis",
            requirement: "at least 3",
            got: target_kurtosis,
        });
    }
    if target_kurtosis == 3.0 {
        return Ok(0.0);
    }

    let tile_pixels = grid.n_voxels();
    let n_tiles = MIN_PIXELS.div_ceil(tile_pixels);
    let mut e_g = Vec::with_capacity(n_tiles * tile_pixels);
    let mut e_ng = Vec::with_capacity(n_tiles * tile_pixels);
    for t in 0..n_tiles as u64 {
        e_g.extend(gaussian_field(grid, fwhm, rng::derive_seed(seed, 2 * t)));
        e_ng.extend(supergaussian_field(
            grid,
            fwhm,
            rng::derive_seed(seed, 2 * t + 1),
        ));
    }

    let kurt_at = |theta: f64| -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let mixed: Vec<f64> = e_g
            .iter()
            .zip(&e_ng)
            .map(|(&g, &ng)| c * g + s * ng)
            .collect();
        stats::kurtosis(&mixed)
    };

    let hi_kurt = kurt_at(core::f64::consts::FRAC_PI_2);
    if target_kurtosis > hi_kurt {
        return Err(SimError::KurtosisOutOfRange {
            target: target_kurtosis,
            lo: 3.0,
            hi: hi_kurt,
        });
    }
    if target_kurtosis >= hi_kurt {
        return Ok(core::f64::consts::FRAC_PI_2);
    }

    let mut lo = 0.0f64;
    let mut hi = core::f64::consts::FRAC_PI_2;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let k = kurt_at(mid);
        if (k - target_kurtosis).abs() <= TOL * 0.5 {
            return Ok(mid);
        }
        if k < target_kurtosis {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Run the full simulation protocol.
///
/// Builds sparse sources, smooths them and the per-component Gaussian
/// fields with the scanner point-spread kernel, standardizes the noise
/// fields, draws a random rotation `M` with determinant +1, and assembles
/// the observed patterns `M·Ã + σ(cosθ·M·E_g + sinθ·E_ng)`. The
/// super-Gaussian term enters in the observation basis, unrotated.
pub fn simulate(config: &SimConfig) -> Result<SimTruth, SimError> {
    config.validate()?;
    let grid = config.grid;
    let n_voxels = grid.n_voxels();
    let k = config.n_sources;

    let theta = match config.target_kurtosis {
        Some(target) => solve_theta(
            target,
            config.fwhm,
            grid,
            rng::derive_seed(config.seed, STREAM_THETA),
        )?,
        None => config.theta,
    };

    let (sources, supports) = make_sources(config)?;
    let mut sources_smoothed = sources.clone();
    if config.smooth_sources {
        let sigma_k = kernel_std(config.fwhm);
        for i in 0..k {
            smooth_map(sources_smoothed.row_mut(i), grid, sigma_k);
        }
    }

    let noise_seed_g = rng::derive_seed(config.seed, STREAM_NOISE_G);
    let noise_seed_ng = rng::derive_seed(config.seed, STREAM_NOISE_NG);
    let mut noise_gaussian = Mat::zeros(k, n_voxels);
    let mut noise_super = Mat::zeros(k, n_voxels);
    for i in 0..k {
        let g = gaussian_field(grid, config.fwhm, rng::derive_seed(noise_seed_g, i as u64));
        noise_gaussian.row_mut(i).copy_from_slice(&g);
        let ng = supergaussian_field(
            grid,
            config.fwhm,
            rng::derive_seed(noise_seed_ng, i as u64),
        );
        noise_super.row_mut(i).copy_from_slice(&ng);
    }

    let mixing_mat = rng::random_orthogonal(k, rng::derive_seed(config.seed, STREAM_MIXING), true);

    // C = M·(Ã + σ cosθ E_g) + σ sinθ E_ng
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let mut in_source_basis = sources_smoothed.clone();
    for i in 0..k {
        let row = in_source_basis.row_mut(i);
        for (v, g) in row.iter_mut().zip(noise_gaussian.row(i)) {
            *v += config.sigma * cos_t * g;
        }
    }
    let mut observed = mixing_mat.dot(&in_source_basis);
    for i in 0..k {
        let row = observed.row_mut(i);
        for (v, ng) in row.iter_mut().zip(noise_super.row(i)) {
            *v += config.sigma * sin_t * ng;
        }
    }

    let mixing = MixingMatrix::new(mixing_mat)?;
    let observed = ComponentSet::new(observed, None, Some(grid), false)?;

    Ok(SimTruth {
        sources,
        sources_smoothed,
        supports,
        mixing,
        observed,
        noise_gaussian,
        noise_super,
        theta,
        config: config.clone(),
    })
}

impl SimTruth {
    /// Noise term of the observed patterns, in the observation basis.
    pub fn noise_term(&self) -> Mat {
        let k = self.config.n_sources;
        let (cos_t, sin_t) = (self.theta.cos(), self.theta.sin());
        let mut rotated = self.mixing.mat().dot(&self.noise_gaussian);
        for i in 0..k {
            let row = rotated.row_mut(i);
            for (v, ng) in row.iter_mut().zip(self.noise_super.row(i)) {
                *v = self.config.sigma * (cos_t * *v + sin_t * ng);
            }
        }
        rotated
    }

    /// The observed patterns expressed in the source basis, `Mᵀ·C`.
    pub fn source_basis(&self) -> Mat {
        self.mixing.mat().tr_dot(self.observed.patterns())
    }
}
