//! Cross-module pipeline behaviour: simulation → whitening → unmixing →
//! thresholding, checked against ground truth.

use std::collections::BTreeMap;

use sica_core::datamodel::{ComponentSet, Dataset, Grid, NullKind};
use sica_core::eval::{self, PipelineParams};
use sica_core::fastica::{self, Contrast};
use sica_core::isonull::{self, NullModel};
use sica_core::simgen::{self, SimConfig};
use sica_core::stats;
use sica_core::whiten;

fn dataset_from(obs: &ComponentSet) -> Dataset {
    Dataset::new(obs.patterns().clone(), obs.grid(), BTreeMap::new()).unwrap()
}

fn run_pipeline(config: &SimConfig, ica_seed: u64) -> (simgen::SimTruth, whiten::PcaFit, fastica::IcaFit) {
    let truth = simgen::simulate(config).unwrap();
    let ds = dataset_from(&truth.observed);
    let pca = whiten::fit_pca(&ds, config.n_sources).unwrap();
    let ica = fastica::fastica(pca.components(), Contrast::LogCosh, 400, 1e-4, ica_seed).unwrap();
    (truth, pca, ica)
}

#[test]
fn two_rectangle_sources_with_little_noise_unmix_cleanly() {
    let config = SimConfig {
        n_sources: 2,
        sigma: 0.05,
        seed: 41,
        ..SimConfig::default()
    };
    let (truth, pca, ica) = run_pipeline(&config, 17);
    let composite = eval::total_unmixing(&pca, &ica).dot(truth.mixing.mat());
    let idx = eval::amari_index(&composite);
    assert!(idx < 0.05, "Amari index {idx}");
}

#[test]
fn nine_sources_at_paper_noise_stay_unmixed_on_average() {
    let mut indices = Vec::new();
    for seed in 0..10u64 {
        let config = SimConfig {
            sigma: 0.15,
            seed: 100 + seed,
            ..SimConfig::default()
        };
        let (truth, pca, ica) = run_pipeline(&config, seed);
        let composite = eval::total_unmixing(&pca, &ica).dot(truth.mixing.mat());
        indices.push(eval::amari_index(&composite));
    }
    let mean = stats::mean(&indices);
    assert!(mean < 0.15, "mean Amari index {mean} over 10 seeds");
}

#[test]
fn noiseless_unsmoothed_sources_are_recovered_perfectly() {
    // Separability needs sparse, non-colliding sources: with many large
    // rectangles the whitened heights approach the thresholds even without
    // noise, and overlapping draws entangle components. This draw has four
    // disjoint sources with plenty of margin.
    let config = SimConfig {
        n_sources: 4,
        sigma: 0.0,
        smooth_sources: false,
        seed: 0,
        ..SimConfig::default()
    };
    let (truth, _pca, ica) = run_pipeline(&config, 3);
    let matched = eval::match_components(ica.sources(), &truth.sources).unwrap();

    let null = NullModel::gaussian();
    for alpha in [0.05, 0.01] {
        let tau = isonull::threshold_for_pvalue(&null, alpha).unwrap();
        let result = isonull::apply_threshold(ica.sources(), tau, alpha, NullKind::Gaussian).unwrap();
        let aligned = eval::align_supports(result.supports(), &matched.permutation);
        let c = eval::confusion(&aligned, &truth.supports).unwrap();
        assert_eq!(c.fp, 0, "alpha {alpha}: false positives");
        assert_eq!(c.fn_, 0, "alpha {alpha}: false negatives");
    }

    // The separable case also saturates the ROC.
    let alphas = [0.005, 0.01, 0.05, 0.1, 0.25, 0.5];
    let curve = eval::roc_sweep(
        ica.sources(),
        &truth,
        &alphas,
        &eval::RocMethod::IsonullGaussian,
    )
    .unwrap();
    assert_eq!(curve.auc, 1.0);
}

#[test]
fn whitened_noise_is_rotation_invariant_for_the_null() {
    // θ = 0 noise-only simulation: the isotropy null sampled from the
    // whitened components is invariant to rotating them.
    let config = SimConfig {
        rect_amplitude: 0.0,
        sigma: 1.0,
        seed: 23,
        ..SimConfig::default()
    };
    let truth = simgen::simulate(&config).unwrap();
    let ds = dataset_from(&truth.observed);
    let pca = whiten::fit_pca(&ds, 9).unwrap();
    let b = pca.components();

    let rot = sica_core::rng::random_orthogonal(9, 5, true);
    let rotated = ComponentSet::new(rot.dot(b.patterns()), None, None, false).unwrap();

    let n0 = isonull::sample_null(b, 500, 11).unwrap();
    let n1 = isonull::sample_null(&rotated, 500, 11).unwrap();
    for alpha in [0.05, 0.01] {
        let t0 = isonull::threshold_for_pvalue(&n0, alpha).unwrap();
        let t1 = isonull::threshold_for_pvalue(&n1, alpha).unwrap();
        assert!(
            ((t0 - t1) / t0).abs() < 0.02,
            "alpha {alpha}: tau {t0} vs rotated {t1}"
        );
    }
}

#[test]
fn empirical_and_gaussian_nulls_agree_on_pure_noise_pipeline() {
    let config = SimConfig {
        rect_amplitude: 0.0,
        sigma: 1.0,
        fwhm: 0.2,
        seed: 31,
        ..SimConfig::default()
    };
    let truth = simgen::simulate(&config).unwrap();
    let ds = dataset_from(&truth.observed);
    let pca = whiten::fit_pca(&ds, 9).unwrap();
    let empirical = isonull::sample_null(pca.components(), 1000, 3).unwrap();
    let gaussian = NullModel::gaussian();
    for alpha in [0.05, 0.01] {
        let te = isonull::threshold_for_pvalue(&empirical, alpha).unwrap();
        let tg = isonull::threshold_for_pvalue(&gaussian, alpha).unwrap();
        assert!(
            (te - tg).abs() < 0.08,
            "alpha {alpha}: empirical {te} vs gaussian {tg}"
        );
    }
}

#[test]
fn downsampled_synthetic_series_stay_consistent() {
    // Temporal extension of a simulation; every interleaved run must stay
    // close to the full-data pseudo truth.
    let truth = simgen::simulate(&SimConfig {
        sigma: 0.15,
        seed: 71,
        ..SimConfig::default()
    })
    .unwrap();
    let y = eval::synthesize_timeseries(&truth, 60, 0.05, 13).unwrap();
    let pipe = PipelineParams {
        n_components: 9,
        seed: 5,
        ..PipelineParams::default()
    };
    let alpha = 0.01;
    let report = eval::downsample_consistency(&y, 3, &pipe, alpha).unwrap();
    assert_eq!(report.runs.len(), 3);
    for run in &report.runs {
        assert!(run.tpr > 0.0, "offset {}: tpr {}", run.offset, run.tpr);
        assert!(
            run.fpr <= 2.0 * alpha,
            "offset {}: fpr {}",
            run.offset,
            run.fpr
        );
    }
}
