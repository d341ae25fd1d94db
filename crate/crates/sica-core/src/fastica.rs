//! Symmetric (parallel) fixed-point FastICA on whitened component patterns.
//!
//! All components are extracted jointly: each iteration applies the
//! fixed-point update to every row of the unmixing matrix and then
//! re-orthogonalizes with a symmetric decorrelation. Output order and signs
//! are canonicalized (descending excess kurtosis, nonnegative skewness) so
//! repeated runs with the same seed are bit-identical.

use alloc::vec::Vec;


use crate::datamodel::{ComponentSet, DataError, MixingMatrix};
use crate::mat::{self, Mat};
use crate::rng;
use crate::stats;

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 400;
/// Additional seeded restarts attempted when a run does not converge.
const RESTARTS: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IcaError {
    #[error("input component set is not whitened")]
    NotWhitened,
    #[error("max_iter must be positive")]
    ZeroIterations,
    #[error("tol must be positive")]
    BadTol,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Contrast nonlinearity for the fixed-point update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contrast {
    /// `G(u) = log cosh u`; the robust general-purpose choice.
    LogCosh,
    /// `G(u) = u⁴/4`; kurtosis-seeking, suited to spiky sources.
    Cube,
}

impl Contrast {
    pub fn as_str(&self) -> &'static str {
        match self {
            Contrast::LogCosh => "logcosh",
            Contrast::Cube => "cube",
        }
    }

    #[inline]
    fn g(&self, u: f64) -> f64 {
        match self {
            Contrast::LogCosh => u.tanh(),
            Contrast::Cube => u * u * u,
        }
    }

    #[inline]
    fn g_prime(&self, u: f64) -> f64 {
        match self {
            Contrast::LogCosh => {
                let t = u.tanh();
                1.0 - t * t
            }
            Contrast::Cube => 3.0 * u * u,
        }
    }

    #[inline]
    fn big_g(&self, u: f64) -> f64 {
        match self {
            Contrast::LogCosh => u.cosh().ln(),
            Contrast::Cube => 0.25 * u * u * u * u,
        }
    }

    fn gaussian_reference(&self) -> f64 {
        match self {
            Contrast::LogCosh => stats::LOGCOSH_GAUSS,
            Contrast::Cube => stats::QUARTIC_GAUSS,
        }
    }
}

/// Result of a FastICA run: unit-variance source estimates, the orthogonal
/// mixing matrix reconstructing the input, and convergence diagnostics.
#[derive(Debug, Clone)]
pub struct IcaFit {
    sources: ComponentSet,
    mixing: MixingMatrix,
    n_iterations: usize,
    converged: bool,
    contrast_initial: f64,
    contrast_final: f64,
}

impl IcaFit {
    pub fn sources(&self) -> &ComponentSet {
        &self.sources
    }

    pub fn mixing(&self) -> &MixingMatrix {
        &self.mixing
    }

    pub fn n_iterations(&self) -> usize {
        self.n_iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Mean squared deviation of the contrast from its Gaussian reference at
    /// the random initialization.
    pub fn contrast_initial(&self) -> f64 {
        self.contrast_initial
    }

    /// Same measure at the returned unmixing.
    pub fn contrast_final(&self) -> f64 {
        self.contrast_final
    }

    /// `unmixing = mixingᵀ`, the rotation sending the whitened patterns to
    /// the source estimates.
    pub fn unmixing(&self) -> Mat {
        self.mixing.mat().transpose()
    }
}

/// Mean over components of the squared deviation of `E[G(u)]` from its
/// value under a standard normal; the non-Gaussianity objective.
fn contrast_value(contrast: Contrast, sources: &Mat) -> f64 {
    let reference = contrast.gaussian_reference();
    let k = sources.rows();
    let mut total = 0.0;
    for i in 0..k {
        let row = sources.row(i);
        let mean_g = row.iter().map(|&u| contrast.big_g(u)).sum::<f64>() / row.len() as f64;
        let dev = mean_g - reference;
        total += dev * dev;
    }
    total / k as f64
}

/// Symmetric decorrelation `W ← (W Wᵀ)^{-1/2} W`.
fn symmetric_decorrelation(w: &Mat) -> Mat {
    mat::inv_sqrt_sym(&w.gram()).dot(w)
}

struct AttemptOutcome {
    w: Mat,
    iterations: usize,
    converged: bool,
    contrast_initial: f64,
}

fn run_attempt(
    x: &Mat,
    contrast: Contrast,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> AttemptOutcome {
    let k = x.rows();
    let n = x.cols() as f64;
    let mut w = rng::random_orthogonal(k, seed, false);
    let contrast_initial = contrast_value(contrast, &w.dot(x));

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let u = w.dot(x);
        // E[g(u) xᵀ] and E[g'(u)] per component.
        let mut gu = u.clone();
        let mut gprime_mean = Vec::with_capacity(k);
        for i in 0..k {
            let row = gu.row_mut(i);
            let mut acc = 0.0;
            for v in row.iter_mut() {
                acc += contrast.g_prime(*v);
                *v = contrast.g(*v);
            }
            gprime_mean.push(acc / n);
        }
        let mut w_raw = gu.dot_tr(x);
        w_raw.scale(1.0 / n);
        for i in 0..k {
            let gm = gprime_mean[i];
            for j in 0..k {
                w_raw[(i, j)] -= gm * w[(i, j)];
            }
        }
        let w_new = symmetric_decorrelation(&w_raw);

        let mut delta = 0.0f64;
        for i in 0..k {
            let mut dot = 0.0;
            for j in 0..k {
                dot += w_new[(i, j)] * w[(i, j)];
            }
            delta = delta.max((1.0 - dot.abs()).abs());
        }
        w = w_new;
        if delta < tol {
            converged = true;
            break;
        }
    }

    AttemptOutcome {
        w,
        iterations,
        converged,
        contrast_initial,
    }
}

/// Estimate the orthogonal unmixing of whitened patterns by maximizing
/// marginal non-Gaussianity.
///
/// On non-convergence the run is restarted (up to 3 times) from fresh
/// seeded initializations; if none converges the last attempt is returned
/// with `converged = false` and the caller decides.
pub fn fastica(
    c: &ComponentSet,
    contrast: Contrast,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<IcaFit, IcaError> {
    if !c.whitened() {
        return Err(IcaError::NotWhitened);
    }
    if max_iter == 0 {
        return Err(IcaError::ZeroIterations);
    }
    if !(tol > 0.0) {
        return Err(IcaError::BadTol);
    }

    let x = c.patterns();
    let mut total_iterations = 0;
    let mut chosen: Option<AttemptOutcome> = None;
    for attempt in 0..=RESTARTS {
        let outcome = run_attempt(x, contrast, max_iter, tol, rng::derive_seed(seed, attempt as u64));
        total_iterations += outcome.iterations;
        let done = outcome.converged;
        chosen = Some(outcome);
        if done {
            break;
        }
    }
    let outcome = chosen.expect("at least one attempt runs");

    let mut sources = outcome.w.dot(x);
    let k = sources.rows();

    // Canonical order and signs: descending excess kurtosis, nonnegative
    // skewness, mirrored into the mixing columns.
    let mut order: Vec<usize> = (0..k).collect();
    let kurt: Vec<f64> = (0..k)
        .map(|i| stats::excess_kurtosis(sources.row(i)))
        .collect();
    order.sort_by(|&a, &b| kurt[b].total_cmp(&kurt[a]).then(a.cmp(&b)));

    let mut canonical = Mat::zeros(k, sources.cols());
    let mut mixing = Mat::zeros(k, k);
    for (new_idx, &old_idx) in order.iter().enumerate() {
        let sign = if stats::skewness(sources.row(old_idx)) < 0.0 {
            -1.0
        } else {
            1.0
        };
        for (j, &v) in sources.row(old_idx).iter().enumerate() {
            canonical[(new_idx, j)] = sign * v;
        }
        // mixing = Wᵀ with the same permutation/sign applied to columns.
        for j in 0..k {
            mixing[(j, new_idx)] = sign * outcome.w[(old_idx, j)];
        }
    }
    sources = canonical;

    let contrast_final = contrast_value(contrast, &sources);
    let sources = ComponentSet::new(sources, None, c.grid(), true)?;
    let mixing = MixingMatrix::new(mixing)?;

    Ok(IcaFit {
        sources,
        mixing,
        n_iterations: total_iterations,
        converged: outcome.converged,
        contrast_initial: outcome.contrast_initial,
        contrast_final,
    })
}
