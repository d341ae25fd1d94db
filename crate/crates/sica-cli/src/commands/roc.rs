//! `sica roc`: ROC curves over simulation conditions for the isotropy-null
//! and mixture thresholding methods.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;
use sica_core::datamodel::Dataset;
use sica_core::eval::{self, RocMethod};
use sica_core::rng;
use sica_core::simgen::{self, SimConfig};

use super::{merge_config, parse_contrast, parse_grid, parse_list, require};
use crate::error::CliError;
use crate::io;
use crate::report::{self, RocRow};

pub const DEFAULT_ALPHAS: &str = "0.005,0.01,0.02,0.05,0.1,0.2,0.35,0.5";
pub const DEFAULT_RATIOS: &str = "0.2,0.5,1,2,5,10,20,50";

#[derive(Debug, Args, Deserialize, Default)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct RocArgs {
    /// JSON file with the same fields as the flags; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Comma-separated noise levels, e.g. 0.15,0.20,0.30.
    #[arg(long)]
    pub sigmas: Option<String>,
    /// Comma-separated noise kinds: gaussian,supergaussian.
    #[arg(long)]
    pub noise: Option<String>,
    /// Kurtosis of the super-Gaussian condition.
    #[arg(long)]
    pub kurtosis: Option<f64>,
    /// Runs per condition.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Base RNG seed (required).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Specified p-values swept for the isotropy-null methods.
    #[arg(long)]
    pub alphas: Option<String>,
    /// Posterior ratios swept for the mixture baseline.
    #[arg(long)]
    pub ratios: Option<String>,
    /// Methods to sweep: any of gaussian,empirical,mixture.
    #[arg(long)]
    pub methods: Option<String>,
    /// Directions for the empirical null.
    #[arg(long)]
    pub directions: Option<usize>,
    /// Grid as HxW.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub sources: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Contrast nonlinearity for the unmixing.
    #[arg(long)]
    pub contrast: Option<String>,
    /// Output CSV for the curves; an `_auc.csv` summary lands beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn auc_path(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}_auc.csv"))
}

pub fn run(mut args: RocArgs) -> Result<(), CliError> {
    if let Some(path) = &args.config {
        let file: RocArgs = io::read_json(path)?;
        merge_config!(
            args, file;
            sigmas, noise, kurtosis, seeds, seed, alphas, ratios, methods, directions,
            grid, sources, amplitude, contrast, out,
        );
    }
    let base_seed = require(args.seed, "seed")?;
    let out = require(args.out, "out")?;
    let sigmas = parse_list(args.sigmas.as_deref().unwrap_or("0.15,0.20,0.30"), "sigmas")?;
    let alphas = parse_list(args.alphas.as_deref().unwrap_or(DEFAULT_ALPHAS), "alphas")?;
    let ratios = parse_list(args.ratios.as_deref().unwrap_or(DEFAULT_RATIOS), "ratios")?;
    let kurtosis = args.kurtosis.unwrap_or(4.0);
    let n_seeds = args.seeds.unwrap_or(10);
    let n_directions = args.directions.unwrap_or(1000);
    let contrast = parse_contrast(args.contrast.as_deref().unwrap_or("logcosh"))?;
    let defaults = SimConfig::default();
    let grid = match &args.grid {
        Some(s) => parse_grid(s)?,
        None => defaults.grid,
    };
    let n_sources = args.sources.unwrap_or(defaults.n_sources);
    let amplitude = args.amplitude.unwrap_or(defaults.rect_amplitude);

    let noises: Vec<String> = args
        .noise
        .as_deref()
        .unwrap_or("gaussian,supergaussian")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    for n in &noises {
        if n != "gaussian" && n != "supergaussian" {
            return Err(CliError::usage(format!(
                "noise kinds are gaussian and supergaussian, got `{n}`"
            )));
        }
    }
    let methods: Vec<String> = args
        .methods
        .as_deref()
        .unwrap_or("gaussian,empirical,mixture")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    for m in &methods {
        if !["gaussian", "empirical", "mixture"].contains(&m.as_str()) {
            return Err(CliError::usage(format!(
                "methods are gaussian, empirical, mixture; got `{m}`"
            )));
        }
    }

    // Every (noise, sigma, seed) cell is independent; run them in parallel
    // and keep cell order fixed so output bytes never depend on scheduling.
    let mut cells = Vec::new();
    for (ni, noise) in noises.iter().enumerate() {
        for (si, &sigma) in sigmas.iter().enumerate() {
            for run in 0..n_seeds {
                cells.push((ni, si, run, noise.clone(), sigma));
            }
        }
    }

    struct CellOutput {
        rows: Vec<RocRow>,
        aucs: Vec<(String, f64, &'static str, f64)>,
    }

    let cell_results: Vec<Result<CellOutput, CliError>> = cells
        .par_iter()
        .map(|(ni, si, run, noise, sigma)| {
            let tag = ((*ni as u64) << 32) | ((*si as u64) << 16) | *run as u64;
            let sim_seed = rng::derive_seed(base_seed, tag);
            let config = SimConfig {
                grid,
                n_sources,
                rect_amplitude: amplitude,
                sigma: *sigma,
                theta: 0.0,
                target_kurtosis: (noise == "supergaussian").then_some(kurtosis),
                fwhm: defaults.fwhm,
                smooth_sources: true,
                seed: sim_seed,
            };
            let truth = simgen::simulate(&config)?;
            let y = Dataset::new(
                truth.observed.patterns().clone(),
                truth.observed.grid(),
                BTreeMap::new(),
            )?;
            let (_pca, ica) = eval::decompose(
                &y,
                n_sources,
                contrast,
                sica_core::fastica::DEFAULT_MAX_ITER,
                sica_core::fastica::DEFAULT_TOL,
                rng::derive_seed(sim_seed, 0x494341),
            )?;
            let mut rows = Vec::new();
            let mut aucs = Vec::new();
            for method_name in &methods {
                let (method, params): (RocMethod, &[f64]) = match method_name.as_str() {
                    "gaussian" => (RocMethod::IsonullGaussian, &alphas),
                    "empirical" => (
                        RocMethod::IsonullEmpirical {
                            n_directions,
                            seed: rng::derive_seed(sim_seed, 0x4e55),
                        },
                        &alphas,
                    ),
                    "mixture" => (
                        RocMethod::Mixture {
                            max_iter: 300,
                            tol: 1e-8,
                            seed: rng::derive_seed(sim_seed, 0x4d58),
                        },
                        &ratios,
                    ),
                    _ => unreachable!(),
                };
                let curve = eval::roc_sweep(ica.sources(), &truth, params, &method)?;
                for p in &curve.points {
                    rows.push(RocRow {
                        fpr: p.fpr,
                        tpr: p.tpr,
                        param: p.param,
                        method: method.label(),
                        seed: *run as u64,
                        sigma: *sigma,
                        noise: noise.clone(),
                    });
                }
                aucs.push((noise.clone(), *sigma, method.label(), curve.auc));
            }
            Ok(CellOutput { rows, aucs })
        })
        .collect();

    let mut curve_rows = Vec::new();
    let mut auc_acc: BTreeMap<(String, u64, &'static str), Vec<f64>> = BTreeMap::new();
    for r in cell_results {
        let cell = r?;
        curve_rows.extend(cell.rows);
        for (noise, sigma, method, auc) in cell.aucs {
            auc_acc
                .entry((noise, sigma.to_bits(), method))
                .or_default()
                .push(auc);
        }
    }
    report::write_roc_csv(&out, &curve_rows)?;

    let mut auc_rows = Vec::new();
    for ((noise, sigma_bits, method), aucs) in &auc_acc {
        let sigma = f64::from_bits(*sigma_bits);
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        auc_rows.push((noise.clone(), sigma, *method, mean));
        println!(
            "roc: {noise} sigma={sigma} {method}: mean AUC {mean:.4} over {} seeds",
            aucs.len()
        );
    }
    report::write_auc_csv(&auc_path(&out), &auc_rows)?;

    println!(
        "roc: wrote {} curve points to {} (AUC summary beside it)",
        curve_rows.len(),
        out.display()
    );
    Ok(())
}
