//! Scoring of estimated components against ground truth: permutation/sign
//! matching, voxel-wise confusion counts, ROC sweeps over operating
//! parameters, false-positive-rate tables over simulation conditions, and
//! the downsampling consistency protocol for data without ground truth.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::assign;
use crate::datamodel::{BoolMat, ComponentSet, DataError, Dataset, NullKind};
use crate::fastica::{self, Contrast, IcaFit};
use crate::isonull::{self, NullError, NullModel};
use crate::mat::Mat;
use crate::mixbase::{self, MixtureError};
use crate::rng;
use crate::simgen::{SimConfig, SimError, SimTruth};
use crate::stats;
use crate::whiten::{self, PcaFit, WhitenError};

const STREAM_ICA: u64 = 0x494341;
const STREAM_FULL_RUN: u64 = 0xf011;
const STREAM_LOADINGS: u64 = 0x4c44;
const STREAM_OBS_NOISE: u64 = 0x4f4e;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("component counts differ: estimated {estimated}, truth {truth}")]
    ComponentCountMismatch { estimated: usize, truth: usize },
    #[error("voxel counts differ: estimated {estimated}, truth {truth}")]
    VoxelCountMismatch { estimated: usize, truth: usize },
    #[error("support shapes differ")]
    SupportShapeMismatch,
    #[error("need at least {needed} time points per subsampled series, got {got}")]
    TooFewTimePoints { needed: usize, got: usize },
    #[error(transparent)]
    Whiten(#[from] WhitenError),
    #[error("ICA failed: {0}")]
    Ica(#[from] fastica::IcaError),
    #[error(transparent)]
    Null(#[from] NullError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Permutation-invariant distance of a square matrix from a scaled
/// permutation; 0 means perfect unmixing, 1 is the worst case.
pub fn amari_index(p: &Mat) -> f64 {
    assert_eq!(p.rows(), p.cols());
    let k = p.rows();
    if k == 1 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for j in 0..k {
            let v = p[(i, j)].abs();
            sum += v;
            max = max.max(v);
        }
        total += sum / max - 1.0;
    }
    for j in 0..k {
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for i in 0..k {
            let v = p[(i, j)].abs();
            sum += v;
            max = max.max(v);
        }
        total += sum / max - 1.0;
    }
    total / (2.0 * k as f64 * (k - 1) as f64)
}

/// Resolution of the permutation/sign ambiguity between estimated and true
/// components.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// `permutation[i]` is the true component matched to estimated row `i`.
    pub permutation: Vec<usize>,
    /// Sign making each matched correlation nonnegative.
    pub signs: Vec<f64>,
    /// Matched absolute correlations, per estimated row.
    pub correlations: Vec<f64>,
}

/// Optimal assignment of estimated to true components maximizing total
/// absolute Pearson correlation (exact Hungarian algorithm).
pub fn match_components(estimated: &ComponentSet, truth: &Mat) -> Result<MatchResult, EvalError> {
    let est = estimated.patterns();
    if est.rows() != truth.rows() {
        return Err(EvalError::ComponentCountMismatch {
            estimated: est.rows(),
            truth: truth.rows(),
        });
    }
    if est.cols() != truth.cols() {
        return Err(EvalError::VoxelCountMismatch {
            estimated: est.cols(),
            truth: truth.cols(),
        });
    }
    let k = est.rows();
    let mut corr = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            corr[(i, j)] = stats::pearson(est.row(i), truth.row(j));
        }
    }
    let score = Mat::from_fn(k, k, |i, j| corr[(i, j)].abs());
    let permutation = assign::hungarian_max(&score);
    let signs: Vec<f64> = (0..k)
        .map(|i| {
            if corr[(i, permutation[i])] < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let correlations: Vec<f64> = (0..k).map(|i| corr[(i, permutation[i])].abs()).collect();
    Ok(MatchResult {
        permutation,
        signs,
        correlations,
    })
}

/// Reorder estimated support rows into truth order: row `i` of the input is
/// placed at row `permutation[i]` of the output.
pub fn align_supports(supports: &BoolMat, permutation: &[usize]) -> BoolMat {
    let mut out = BoolMat::new(supports.rows(), supports.cols());
    for (i, &target) in permutation.iter().enumerate() {
        for (j, &v) in supports.row(i).iter().enumerate() {
            out.set(target, j, v);
        }
    }
    out
}

/// Voxel-wise confusion counts pooled over all components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn fpr(&self) -> f64 {
        if self.fp + self.tn == 0 {
            return f64::NAN;
        }
        self.fp as f64 / (self.fp + self.tn) as f64
    }

    pub fn tpr(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            return f64::NAN;
        }
        self.tp as f64 / (self.tp + self.fn_) as f64
    }
}

/// Pooled confusion of two equally-shaped support matrices (matched
/// ordering applied beforehand).
pub fn confusion(est: &BoolMat, truth: &BoolMat) -> Result<Confusion, EvalError> {
    if est.rows() != truth.rows() || est.cols() != truth.cols() {
        return Err(EvalError::SupportShapeMismatch);
    }
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (e, t) in est.data().iter().zip(truth.data()) {
        match (e, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// One ROC operating point; `param` is the alpha (isotropy-null methods) or
/// the posterior ratio (mixture baseline) that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub param: f64,
}

/// An ROC curve: raw points sorted by FPR, and the trapezoidal area under
/// the monotone envelope anchored at (0,0) and (1,1).
#[derive(Debug, Clone)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    pub fn from_points(mut points: Vec<RocPoint>) -> Self {
        points.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
        // Monotone envelope over the anchored curve.
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for p in &points {
            xs.push(p.fpr.clamp(0.0, 1.0));
            ys.push(p.tpr.clamp(0.0, 1.0));
        }
        xs.push(1.0);
        ys.push(1.0);
        let mut running = 0.0f64;
        for y in ys.iter_mut() {
            running = running.max(*y);
            *y = running;
        }
        let mut auc = 0.0;
        for i in 1..xs.len() {
            auc += (xs[i] - xs[i - 1]) * 0.5 * (ys[i] + ys[i - 1]);
        }
        RocCurve {
            points,
            auc: auc.clamp(0.0, 1.0),
        }
    }
}

/// Thresholding method swept by [`roc_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RocMethod {
    IsonullGaussian,
    IsonullEmpirical { n_directions: usize, seed: u64 },
    /// Mixture baseline; sweep parameters are posterior ratios.
    Mixture { max_iter: usize, tol: f64, seed: u64 },
}

impl RocMethod {
    pub fn label(&self) -> &'static str {
        match self {
            RocMethod::IsonullGaussian => "isonull-gaussian",
            RocMethod::IsonullEmpirical { .. } => "isonull-empirical",
            RocMethod::Mixture { .. } => "mixture",
        }
    }
}

/// Sweep operating points of a thresholding method on estimated sources
/// against simulation ground truth.
///
/// `params` are specified p-values for the isotropy-null methods and
/// posterior ratios for the mixture baseline.
pub fn roc_sweep(
    b_hat: &ComponentSet,
    truth: &SimTruth,
    params: &[f64],
    method: &RocMethod,
) -> Result<RocCurve, EvalError> {
    let matched = match_components(b_hat, &truth.sources)?;
    let mut points = Vec::with_capacity(params.len());

    match method {
        RocMethod::IsonullGaussian | RocMethod::IsonullEmpirical { .. } => {
            let null = match method {
                RocMethod::IsonullGaussian => NullModel::gaussian(),
                RocMethod::IsonullEmpirical { n_directions, seed } => {
                    isonull::sample_null(b_hat, *n_directions, *seed)?
                }
                RocMethod::Mixture { .. } => unreachable!(),
            };
            let kind = null.kind();
            for &alpha in params {
                let tau = isonull::threshold_for_pvalue(&null, alpha)?;
                let result = isonull::apply_threshold(b_hat, tau, alpha, kind)?;
                let aligned = align_supports(result.supports(), &matched.permutation);
                let c = confusion(&aligned, &truth.supports)?;
                points.push(RocPoint {
                    fpr: c.fpr(),
                    tpr: c.tpr(),
                    param: alpha,
                });
            }
        }
        RocMethod::Mixture {
            max_iter,
            tol,
            seed,
        } => {
            let k = b_hat.n_components();
            let fits: Vec<mixbase::MixtureFit> = (0..k)
                .map(|i| {
                    mixbase::fit_mixture(
                        b_hat.patterns().row(i),
                        *max_iter,
                        *tol,
                        rng::derive_seed(*seed, i as u64),
                    )
                })
                .collect::<Result<_, _>>()?;
            for &ratio in params {
                let mut supports = BoolMat::new(k, b_hat.n_voxels());
                for i in 0..k {
                    let sel =
                        mixbase::threshold_mixture(&fits[i], b_hat.patterns().row(i), ratio);
                    for (j, s) in sel.into_iter().enumerate() {
                        supports.set(i, j, s);
                    }
                }
                let aligned = align_supports(&supports, &matched.permutation);
                let c = confusion(&aligned, &truth.supports)?;
                points.push(RocPoint {
                    fpr: c.fpr(),
                    tpr: c.tpr(),
                    param: ratio,
                });
            }
        }
    }

    Ok(RocCurve::from_points(points))
}

/// Parameters of the whiten-then-unmix pipeline shared by the evaluation
/// drivers.
#[derive(Debug, Clone, Copy)]
pub struct PipelineParams {
    pub n_components: usize,
    pub contrast: Contrast,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            n_components: 9,
            contrast: Contrast::LogCosh,
            max_iter: fastica::DEFAULT_MAX_ITER,
            tol: fastica::DEFAULT_TOL,
            seed: 0,
        }
    }
}

/// Whiten a dataset and unmix the retained components.
pub fn decompose(
    y: &Dataset,
    n_components: usize,
    contrast: Contrast,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<(PcaFit, IcaFit), EvalError> {
    let pca = whiten::fit_pca(y, n_components)?;
    let ica = fastica::fastica(pca.components(), contrast, max_iter, tol, seed)?;
    Ok((pca, ica))
}

/// The composite transform from (centered) observations to source
/// estimates, `unmixing · whitening`; its product with a true mixing matrix
/// feeds the Amari index.
pub fn total_unmixing(pca: &PcaFit, ica: &IcaFit) -> Mat {
    ica.unmixing().dot(&pca.whitening_transform())
}

fn dataset_from_truth(truth: &SimTruth) -> Result<Dataset, EvalError> {
    Ok(Dataset::new(
        truth.observed.patterns().clone(),
        truth.observed.grid(),
        alloc::collections::BTreeMap::new(),
    )?)
}

/// Which isotropy-null threshold the FPR harness applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FprMethod {
    Gaussian,
    Empirical { n_directions: usize },
}

/// One simulate → whiten → unmix → threshold → score run; returns the
/// observed voxel-wise FPR at each alpha.
pub fn fpr_single_run(
    config: &SimConfig,
    alphas: &[f64],
    pipe: &PipelineParams,
    method: FprMethod,
) -> Result<Vec<f64>, EvalError> {
    let truth = crate::simgen::simulate(config)?;
    let ds = dataset_from_truth(&truth)?;
    let ica_seed = rng::derive_seed(pipe.seed, rng::derive_seed(config.seed, STREAM_ICA));
    let (_pca, ica) = decompose(
        &ds,
        config.n_sources,
        pipe.contrast,
        pipe.max_iter,
        pipe.tol,
        ica_seed,
    )?;
    let matched = match_components(ica.sources(), &truth.sources)?;
    let (null, kind) = match method {
        FprMethod::Gaussian => (NullModel::gaussian(), NullKind::Gaussian),
        FprMethod::Empirical { n_directions } => (
            isonull::sample_null(
                ica.sources(),
                n_directions,
                rng::derive_seed(ica_seed, 0x4e55),
            )?,
            NullKind::Empirical,
        ),
    };
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let tau = isonull::threshold_for_pvalue(&null, alpha)?;
        let result = isonull::apply_threshold(ica.sources(), tau, alpha, kind)?;
        let aligned = align_supports(result.supports(), &matched.permutation);
        let c = confusion(&aligned, &truth.supports)?;
        out.push(c.fpr());
    }
    Ok(out)
}

/// Observed FPR per (condition, alpha), averaged over `n_seeds` seeded runs
/// of the full pipeline. Row order follows `configs`; per-run seeds are
/// derived from each config's seed, so the table is reproducible.
pub fn fpr_table(
    configs: &[SimConfig],
    alphas: &[f64],
    n_seeds: usize,
    pipe: &PipelineParams,
    method: FprMethod,
) -> Result<Vec<Vec<f64>>, EvalError> {
    let mut table = Vec::with_capacity(configs.len());
    for config in configs {
        let mut acc = vec![0.0f64; alphas.len()];
        for run in 0..n_seeds {
            let run_config = SimConfig {
                seed: rng::derive_seed(config.seed, run as u64),
                ..config.clone()
            };
            let fprs = fpr_single_run(&run_config, alphas, pipe, method)?;
            for (a, f) in acc.iter_mut().zip(&fprs) {
                *a += f;
            }
        }
        for a in acc.iter_mut() {
            *a /= n_seeds as f64;
        }
        table.push(acc);
    }
    Ok(table)
}

/// Synthetic time series over simulated patterns: smooth random loadings
/// times the observed components, plus small Gaussian observation noise.
pub fn synthesize_timeseries(
    truth: &SimTruth,
    n_time: usize,
    obs_noise_std: f64,
    seed: u64,
) -> Result<Dataset, EvalError> {
    let k = truth.config.n_sources;
    let mut loadings = Mat::zeros(n_time, k);
    let window = (n_time / 8).max(2);
    for j in 0..k {
        let raw = rng::normal_vec(
            n_time + window,
            rng::derive_seed(rng::derive_seed(seed, STREAM_LOADINGS), j as u64),
        );
        // Moving average of white noise: a smooth random course.
        let mut course: Vec<f64> = (0..n_time)
            .map(|t| raw[t..t + window].iter().sum::<f64>() / window as f64)
            .collect();
        stats::standardize(&mut course);
        for (t, &v) in course.iter().enumerate() {
            loadings[(t, j)] = v;
        }
    }
    let mut y = loadings.dot(truth.observed.patterns());
    if obs_noise_std > 0.0 {
        let noise = rng::normal_matrix(
            n_time,
            y.cols(),
            rng::derive_seed(seed, STREAM_OBS_NOISE),
        );
        for (v, n) in y.data_mut().iter_mut().zip(noise.data()) {
            *v += obs_noise_std * n;
        }
    }
    Ok(Dataset::new(
        y,
        truth.observed.grid(),
        alloc::collections::BTreeMap::new(),
    )?)
}

/// Scores of one subsampled run against the full-data pseudo ground truth.
#[derive(Debug, Clone)]
pub struct ConsistencyRun {
    pub offset: usize,
    pub n_time: usize,
    pub fpr: f64,
    pub tpr: f64,
    pub n_selected: usize,
    pub mean_matched_correlation: f64,
}

/// Report of the downsampling consistency protocol.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub alpha: f64,
    pub k: usize,
    pub pseudo_selected: usize,
    pub runs: Vec<ConsistencyRun>,
    /// Methodological caveat carried into reports rather than applied
    /// silently.
    pub note: String,
}

/// The note attached to every consistency report.
pub const CONSISTENCY_NOTE: &str = "pseudo ground truth carries its own errors; \
against an ideal reference the observed fpr may be corrected by a factor 0.5 \
(reported values are uncorrected)";

fn slice_rows(y: &Dataset, offset: usize, step: usize) -> Result<Dataset, EvalError> {
    let data = y.data();
    let rows: Vec<usize> = (offset..data.rows()).step_by(step).collect();
    let mut out = Mat::zeros(rows.len(), data.cols());
    for (new_idx, &old_idx) in rows.iter().enumerate() {
        out.row_mut(new_idx).copy_from_slice(data.row(old_idx));
    }
    Ok(Dataset::new(
        out,
        y.grid(),
        alloc::collections::BTreeMap::new(),
    )?)
}

/// Run the pipeline on the full series (pseudo ground truth) and on each of
/// the `k` interleaved subsampled series; score every subsampled run's
/// thresholded components against the full-data supports.
pub fn downsample_consistency(
    y: &Dataset,
    k: usize,
    pipe: &PipelineParams,
    alpha: f64,
) -> Result<ConsistencyReport, EvalError> {
    assert!(k >= 1);
    let n_time = y.n_time();
    if n_time < 3 * k {
        return Err(EvalError::TooFewTimePoints {
            needed: 3 * k,
            got: n_time,
        });
    }
    let min_slice = n_time / k; // shortest interleave length
    if min_slice < pipe.n_components {
        return Err(EvalError::TooFewTimePoints {
            needed: k * pipe.n_components,
            got: n_time,
        });
    }

    let full_seed = rng::derive_seed(pipe.seed, STREAM_FULL_RUN);
    let (_, full_ica) = decompose(
        y,
        pipe.n_components,
        pipe.contrast,
        pipe.max_iter,
        pipe.tol,
        full_seed,
    )?;
    let null = NullModel::gaussian();
    let tau = isonull::threshold_for_pvalue(&null, alpha)?;
    let pseudo =
        isonull::apply_threshold(full_ica.sources(), tau, alpha, NullKind::Gaussian)?;

    let mut runs = Vec::with_capacity(k);
    for offset in 0..k {
        let slice = slice_rows(y, offset, k)?;
        let seed = if slice.n_time() == n_time {
            full_seed
        } else {
            rng::derive_seed(pipe.seed, offset as u64)
        };
        let (_, ica) = decompose(
            &slice,
            pipe.n_components,
            pipe.contrast,
            pipe.max_iter,
            pipe.tol,
            seed,
        )?;
        let matched = match_components(ica.sources(), full_ica.sources().patterns())?;
        let result = isonull::apply_threshold(ica.sources(), tau, alpha, NullKind::Gaussian)?;
        let aligned = align_supports(result.supports(), &matched.permutation);
        let c = confusion(&aligned, pseudo.supports())?;
        runs.push(ConsistencyRun {
            offset,
            n_time: slice.n_time(),
            fpr: c.fpr(),
            tpr: c.tpr(),
            n_selected: aligned.count_true(),
            mean_matched_correlation: stats::mean(&matched.correlations),
        });
    }

    Ok(ConsistencyReport {
        alpha,
        k,
        pseudo_selected: pseudo.supports().count_true(),
        runs,
        note: String::from(CONSISTENCY_NOTE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Grid;
    use crate::rng;
    use alloc::collections::BTreeMap;

    #[test]
    fn amari_index_is_zero_for_signed_permutations() {
        let mut p = Mat::zeros(4, 4);
        p[(0, 2)] = 3.0;
        p[(1, 0)] = -1.5;
        p[(2, 3)] = 0.2;
        p[(3, 1)] = -7.0;
        assert!(amari_index(&p) < 1e-12);

        let ones = Mat::from_vec(3, 3, vec![1.0; 9]);
        assert!((amari_index(&ones) - 1.0).abs() < 1e-12);

        let near = Mat::from_vec(2, 2, vec![1.0, 0.05, -0.03, 1.0]);
        let idx = amari_index(&near);
        assert!(idx > 0.0 && idx < 0.1, "index {idx}");
    }

    #[test]
    fn matching_recovers_permutation_and_signs() {
        let truth = rng::normal_matrix(4, 300, 50);
        // estimated = truth rows permuted (0→2, 1→0, 2→3, 3→1), row 3 negated.
        let perm_applied = [2usize, 0, 3, 1];
        let mut est = Mat::zeros(4, 300);
        for i in 0..4 {
            for j in 0..300 {
                est[(i, j)] = truth[(perm_applied[i], j)];
            }
        }
        for j in 0..300 {
            est[(3, j)] = -est[(3, j)];
        }
        let est = ComponentSet::new(est, None, None, false).unwrap();
        let m = match_components(&est, &truth).unwrap();
        assert_eq!(m.permutation, vec![2, 0, 3, 1]);
        assert_eq!(m.signs[3], -1.0);
        assert_eq!(m.signs[0], 1.0);
        for &c in &m.correlations {
            assert!(c > 0.999999);
        }
    }

    #[test]
    fn matching_survives_noise_perturbation() {
        let truth = rng::normal_matrix(5, 1000, 51);
        let noise = rng::normal_matrix(5, 1000, 52);
        let mut est = truth.clone();
        for (e, n) in est.data_mut().iter_mut().zip(noise.data()) {
            // snr 10 in amplitude
            *e += 0.1 * n;
        }
        let est = ComponentSet::new(est, None, None, false).unwrap();
        let m = match_components(&est, &truth).unwrap();
        assert_eq!(m.permutation, vec![0, 1, 2, 3, 4]);
        for &c in &m.correlations {
            assert!(c > 0.95, "correlation {c}");
        }
    }

    #[test]
    fn duplicate_truth_rows_still_give_a_bijection() {
        let mut truth = rng::normal_matrix(4, 500, 53);
        for j in 0..500 {
            truth[(1, j)] = truth[(0, j)]; // two identical true sources
        }
        let est = ComponentSet::new(truth.clone(), None, None, false).unwrap();
        let m = match_components(&est, &truth).unwrap();
        let mut seen = vec![false; 4];
        for &p in &m.permutation {
            assert!(!seen[p]);
            seen[p] = true;
        }
        // Total matched correlation equals the brute-force optimum.
        let total: f64 = m.correlations.iter().sum();
        assert!(total > 4.0 - 1e-9);
    }

    #[test]
    fn confusion_counts_identity_and_complement() {
        let mut t = BoolMat::new(2, 10);
        for j in 0..4 {
            t.set(0, j, true);
        }
        let c = confusion(&t, &t).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert_eq!(c.tp, 4);

        let mut complement = BoolMat::new(2, 10);
        for i in 0..2 {
            for j in 0..10 {
                complement.set(i, j, !t.get(i, j));
            }
        }
        let c = confusion(&complement, &t).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
    }

    #[test]
    fn random_selection_sits_on_the_diagonal() {
        // Independent random est at density d: fpr ≈ tpr ≈ d within 3 SE.
        use rand::Rng;
        let mut rng = rng::rng_from_seed(99);
        let n = 20_000usize;
        let density = 0.2;
        let truth_density = 0.3;
        let mut est = BoolMat::new(1, n);
        let mut truth = BoolMat::new(1, n);
        for j in 0..n {
            est.set(0, j, rng.random::<f64>() < density);
            truth.set(0, j, rng.random::<f64>() < truth_density);
        }
        let c = confusion(&est, &truth).unwrap();
        let se = (density * (1.0 - density) / n as f64).sqrt();
        assert!((c.fpr() - density).abs() < 3.0 * se + 0.01);
        assert!((c.tpr() - density).abs() < 3.0 * se + 0.01);
    }

    #[test]
    fn roc_envelope_is_monotone_and_bounded() {
        let points = vec![
            RocPoint { fpr: 0.3, tpr: 0.5, param: 0.1 },
            RocPoint { fpr: 0.1, tpr: 0.6, param: 0.05 }, // non-monotone raw
            RocPoint { fpr: 0.6, tpr: 0.9, param: 0.2 },
        ];
        let curve = RocCurve::from_points(points);
        assert!(curve.auc >= 0.0 && curve.auc <= 1.0);
        for w in curve.points.windows(2) {
            assert!(w[0].fpr <= w[1].fpr);
        }
    }

    #[test]
    fn random_scores_have_half_auc() {
        use rand::Rng;
        let mut aucs = Vec::new();
        for seed in 0..20u64 {
            let mut rng = rng::rng_from_seed(7000 + seed);
            let n = 4000;
            let mut truth = BoolMat::new(1, n);
            for j in 0..n {
                truth.set(0, j, rng.random::<f64>() < 0.3);
            }
            let mut points = Vec::new();
            for &d in &[0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 0.9] {
                let mut est = BoolMat::new(1, n);
                for j in 0..n {
                    est.set(0, j, rng.random::<f64>() < d);
                }
                let c = confusion(&est, &truth).unwrap();
                points.push(RocPoint {
                    fpr: c.fpr(),
                    tpr: c.tpr(),
                    param: d,
                });
            }
            aucs.push(RocCurve::from_points(points).auc);
        }
        let mean_auc = stats::mean(&aucs);
        assert!(
            (mean_auc - 0.5).abs() < 0.05,
            "random-scores AUC {mean_auc}"
        );
    }

    #[test]
    fn fpr_table_is_reproducible() {
        let config = SimConfig {
            grid: Grid::new(40, 40),
            n_sources: 3,
            sigma: 0.15,
            rect_amplitude: 0.5,
            seed: 4,
            ..SimConfig::default()
        };
        let pipe = PipelineParams {
            n_components: 3,
            max_iter: 200,
            ..PipelineParams::default()
        };
        let alphas = [0.05, 0.01];
        let a = fpr_table(core::slice::from_ref(&config), &alphas, 2, &pipe, FprMethod::Gaussian)
            .unwrap();
        let b = fpr_table(core::slice::from_ref(&config), &alphas, 2, &pipe, FprMethod::Gaussian)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_comparison_is_perfect() {
        // k = 1: the subsampled series is the full series; the report must
        // show fpr 0, tpr 1 exactly.
        let truth = crate::simgen::simulate(&SimConfig {
            grid: Grid::new(40, 40),
            n_sources: 3,
            sigma: 0.15,
            rect_amplitude: 0.8,
            seed: 11,
            ..SimConfig::default()
        })
        .unwrap();
        let y = synthesize_timeseries(&truth, 24, 0.02, 5).unwrap();
        let pipe = PipelineParams {
            n_components: 3,
            max_iter: 300,
            seed: 8,
            ..PipelineParams::default()
        };
        let report = downsample_consistency(&y, 1, &pipe, 0.01).unwrap();
        assert_eq!(report.runs.len(), 1);
        assert_eq!(report.runs[0].fpr, 0.0);
        assert_eq!(report.runs[0].tpr, 1.0);
    }

    #[test]
    fn periodic_series_gives_identical_runs() {
        // Every frame equal: all interleaves see the same constant series.
        let map = rng::normal_vec(1600, 3);
        let mut y = Mat::zeros(12, 1600);
        for t in 0..12 {
            y.row_mut(t).copy_from_slice(&map);
        }
        let y = Dataset::new(y, Some(Grid::new(40, 40)), BTreeMap::new()).unwrap();
        let pipe = PipelineParams {
            n_components: 1,
            max_iter: 200,
            seed: 2,
            ..PipelineParams::default()
        };
        let report = downsample_consistency(&y, 3, &pipe, 0.01).unwrap();
        assert_eq!(report.runs.len(), 3);
        for run in &report.runs {
            assert_eq!(run.fpr, report.runs[0].fpr);
            assert_eq!(run.tpr, report.runs[0].tpr);
            assert_eq!(run.n_selected, report.runs[0].n_selected);
        }
    }

    #[test]
    fn too_few_time_points_error() {
        let y = Dataset::new(rng::normal_matrix(5, 100, 1), None, BTreeMap::new()).unwrap();
        assert!(matches!(
            downsample_consistency(&y, 3, &PipelineParams::default(), 0.01),
            Err(EvalError::TooFewTimePoints { .. })
        ));
    }
}
