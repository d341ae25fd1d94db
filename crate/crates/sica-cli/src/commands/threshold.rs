//! `sica threshold`: select per-component supports, either against the
//! isotropy null (gaussian or empirical) or with the mixture-model
//! baseline.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sica_core::datamodel::{BoolMat, ComponentSet, NullKind};
use sica_core::isonull;
use sica_core::mixbase;

use super::{created_by, ensure_dir, merge_config, require};
use crate::error::CliError;
use crate::io;

const FPR_NOTE: &str = "note: thresholds control the per-voxel false-positive rate at the \
specified p-value; no correction across voxels is applied";

#[derive(Debug, Args, Deserialize, Default)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdArgs {
    /// JSON file with the same fields as the flags; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Component matrix to threshold (B.sica from `decompose`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// gaussian | empirical | mixture
    #[arg(long)]
    pub method: Option<String>,
    /// Specified p-value for the isotropy-null methods.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Posterior odds ratio for the mixture baseline.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Directions sampled for the empirical null.
    #[arg(long)]
    pub directions: Option<usize>,
    /// EM iteration cap for the mixture baseline.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// EM relative-improvement tolerance for the mixture baseline.
    #[arg(long)]
    pub tol: Option<f64>,
    /// RNG seed (required).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct IsonullRecord {
    method: &'static str,
    alpha: f64,
    tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_directions: Option<usize>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_warning: Option<bool>,
    n_selected: usize,
    created_by: String,
}

#[derive(Debug, Serialize)]
struct MixtureComponentRecord {
    weights: [f64; 3],
    null_mean: f64,
    null_std: f64,
    pos_shape: f64,
    pos_scale: f64,
    pos_shift: f64,
    neg_shape: f64,
    neg_scale: f64,
    neg_shift: f64,
    log_likelihood: f64,
    n_em_iterations: usize,
    pos_collapsed: bool,
    neg_collapsed: bool,
    selection_monotone: bool,
}

#[derive(Debug, Serialize)]
struct MixtureRecord {
    method: &'static str,
    ratio: f64,
    seed: u64,
    n_selected: usize,
    components: Vec<MixtureComponentRecord>,
    created_by: String,
}

pub fn run(mut args: ThresholdArgs) -> Result<(), CliError> {
    if let Some(path) = &args.config {
        let file: ThresholdArgs = io::read_json(path)?;
        merge_config!(args, file; input, method, alpha, ratio, directions, max_iter, tol, seed, out);
    }

    let input = require(args.input, "input")?;
    let method = require(args.method, "method")?;
    let seed = require(args.seed, "seed")?;
    let out = require(args.out, "out")?;

    let patterns = io::read_matrix(&input)?;
    let grid = io::read_json::<io::MatrixMeta>(&io::sidecar_path(&input))
        .ok()
        .and_then(|m| m.grid);
    ensure_dir(&out)?;

    match method.as_str() {
        "gaussian" | "empirical" => {
            let alpha = require(args.alpha, "alpha")?;
            let b = ComponentSet::new(patterns, None, None, false)?;
            let (null, kind) = if method == "gaussian" {
                (isonull::NullModel::gaussian(), NullKind::Gaussian)
            } else {
                let n_directions = args.directions.unwrap_or(isonull::DEFAULT_N_DIRECTIONS);
                let null = isonull::sample_null(&b, n_directions, seed)?;
                if null.tail_warning() {
                    eprintln!(
                        "warning: only {} directions sampled; the null's upper tail is unstable \
                         (use at least {})",
                        null.n_directions(),
                        isonull::MIN_STABLE_DIRECTIONS
                    );
                }
                (null, NullKind::Empirical)
            };
            let tau = isonull::threshold_for_pvalue(&null, alpha)?;
            let result = isonull::apply_threshold(&b, tau, alpha, kind)?;
            write_supports(&out, result.supports(), seed, grid)?;
            io::write_json(
                &IsonullRecord {
                    method: kind.as_str(),
                    alpha,
                    tau,
                    n_directions: (kind == NullKind::Empirical).then(|| null.n_directions()),
                    seed,
                    tail_warning: (kind == NullKind::Empirical).then(|| null.tail_warning()),
                    n_selected: result.supports().count_true(),
                    created_by: created_by(),
                },
                &out.join("threshold.json"),
            )?;
            eprintln!("{FPR_NOTE}");
            println!(
                "threshold: method={} alpha={} tau={:.5} selected {} voxels -> {}",
                kind.as_str(),
                alpha,
                tau,
                result.supports().count_true(),
                out.display()
            );
        }
        "mixture" => {
            let ratio = require(args.ratio, "ratio")?;
            if !(ratio > 0.0) {
                return Err(CliError::usage(format!(
                    "ratio must be positive, got {ratio}"
                )));
            }
            let max_iter = args.max_iter.unwrap_or(300);
            let tol = args.tol.unwrap_or(1e-8);
            let k = patterns.rows();
            let mut supports = BoolMat::new(k, patterns.cols());
            let mut components = Vec::with_capacity(k);
            for i in 0..k {
                let row = patterns.row(i);
                let fit = mixbase::fit_mixture(
                    row,
                    max_iter,
                    tol,
                    sica_core::rng::derive_seed(seed, i as u64),
                )?;
                let sel = mixbase::threshold_mixture(&fit, row, ratio);
                for (j, s) in sel.into_iter().enumerate() {
                    supports.set(i, j, s);
                }
                let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let monotone = mixbase::selection_monotone_in_magnitude(&fit, lo, hi, ratio);
                if !monotone {
                    eprintln!(
                        "warning: component {i}: mixture selection is not monotone in |value| \
                         at ratio {ratio}"
                    );
                }
                components.push(MixtureComponentRecord {
                    weights: fit.weights,
                    null_mean: fit.null_mean,
                    null_std: fit.null_std,
                    pos_shape: fit.pos_shape,
                    pos_scale: fit.pos_scale,
                    pos_shift: fit.pos_shift,
                    neg_shape: fit.neg_shape,
                    neg_scale: fit.neg_scale,
                    neg_shift: fit.neg_shift,
                    log_likelihood: fit.log_likelihood,
                    n_em_iterations: fit.n_em_iterations,
                    pos_collapsed: fit.pos_collapsed,
                    neg_collapsed: fit.neg_collapsed,
                    selection_monotone: monotone,
                });
            }
            write_supports(&out, &supports, seed, grid)?;
            io::write_json(
                &MixtureRecord {
                    method: "mixture",
                    ratio,
                    seed,
                    n_selected: supports.count_true(),
                    components,
                    created_by: created_by(),
                },
                &out.join("threshold.json"),
            )?;
            println!(
                "threshold: method=mixture ratio={} selected {} voxels -> {}",
                ratio,
                supports.count_true(),
                out.display()
            );
        }
        other => {
            return Err(CliError::usage(format!(
                "method must be gaussian, empirical, or mixture, got `{other}`"
            )));
        }
    }
    Ok(())
}

fn write_supports(
    out: &std::path::Path,
    supports: &BoolMat,
    seed: u64,
    grid: Option<(usize, usize)>,
) -> Result<(), CliError> {
    let path = out.join("supports.sica");
    io::write_matrix(&supports.to_mat(), &path)?;
    io::write_sidecar(
        &path,
        &io::MatrixMeta {
            seed: Some(seed),
            created_by: created_by(),
            grid,
        },
    )?;
    Ok(())
}
