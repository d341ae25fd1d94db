//! `sica decompose`: whiten an observed matrix and unmix it with FastICA.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sica_core::datamodel::{Dataset, Grid};
use sica_core::eval;
use sica_core::fastica;

use super::{created_by, ensure_dir, merge_config, parse_contrast, require};
use crate::error::CliError;
use crate::io;

#[derive(Debug, Args, Deserialize, Default)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeArgs {
    /// JSON file with the same fields as the flags; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Input matrix (.sica), or a simulation directory holding observed.sica.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Number of components to retain.
    #[arg(long)]
    pub components: Option<usize>,
    /// Contrast nonlinearity: logcosh or cube.
    #[arg(long)]
    pub contrast: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// RNG seed for the unmixing initialization (required).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct FitRecord {
    n_components: usize,
    contrast: &'static str,
    max_iter: usize,
    tol: f64,
    seed: u64,
    converged: bool,
    n_iterations: usize,
    singular_values: Vec<f64>,
    residual_variance: f64,
    contrast_initial: f64,
    contrast_final: f64,
    created_by: String,
}

/// Grid lookup for a matrix input: a simulation directory's config.json or
/// a sidecar next to a bare matrix file.
fn find_grid(input: &Path, matrix_path: &Path, n_voxels: usize) -> Option<Grid> {
    if input.is_dir() {
        if let Ok(cfg) =
            io::read_json::<super::simulate::SimConfigRecord>(&input.join("config.json"))
        {
            let g = Grid::new(cfg.grid.0, cfg.grid.1);
            if g.n_voxels() == n_voxels {
                return Some(g);
            }
        }
    }
    if let Ok(meta) = io::read_json::<io::MatrixMeta>(&io::sidecar_path(matrix_path)) {
        if let Some((h, w)) = meta.grid {
            let g = Grid::new(h, w);
            if g.n_voxels() == n_voxels {
                return Some(g);
            }
        }
    }
    None
}

pub fn run(mut args: DecomposeArgs) -> Result<(), CliError> {
    if let Some(path) = &args.config {
        let file: DecomposeArgs = io::read_json(path)?;
        merge_config!(args, file; input, components, contrast, max_iter, tol, seed, out);
    }

    let input = require(args.input, "input")?;
    let n_components = require(args.components, "components")?;
    let seed = require(args.seed, "seed")?;
    let out = require(args.out, "out")?;
    let contrast = parse_contrast(args.contrast.as_deref().unwrap_or("logcosh"))?;
    let max_iter = args.max_iter.unwrap_or(fastica::DEFAULT_MAX_ITER);
    let tol = args.tol.unwrap_or(fastica::DEFAULT_TOL);

    let matrix_path = if input.is_dir() {
        input.join("observed.sica")
    } else {
        input.clone()
    };
    let data = io::read_matrix(&matrix_path)?;
    let grid = find_grid(&input, &matrix_path, data.cols());
    let y = Dataset::new(data, grid, BTreeMap::new())?;

    let (pca, ica) = eval::decompose(&y, n_components, contrast, max_iter, tol, seed)?;

    ensure_dir(&out)?;
    let meta = io::MatrixMeta {
        seed: Some(seed),
        created_by: created_by(),
        grid: grid.map(|g| (g.height, g.width)),
    };
    let b_path = out.join("B.sica");
    io::write_matrix(ica.sources().patterns(), &b_path)?;
    io::write_sidecar(&b_path, &meta)?;
    let m_path = out.join("M.sica");
    io::write_matrix(ica.mixing().mat(), &m_path)?;
    io::write_sidecar(&m_path, &meta)?;
    io::write_json(
        &FitRecord {
            n_components,
            contrast: contrast.as_str(),
            max_iter,
            tol,
            seed,
            converged: ica.converged(),
            n_iterations: ica.n_iterations(),
            singular_values: pca.singular_values().to_vec(),
            residual_variance: pca.residual_variance(),
            contrast_initial: ica.contrast_initial(),
            contrast_final: ica.contrast_final(),
            created_by: created_by(),
        },
        &out.join("fit.json"),
    )?;

    println!(
        "decompose: {} components, converged={} after {} iterations -> {}",
        n_components,
        ica.converged(),
        ica.n_iterations(),
        out.display()
    );
    Ok(())
}
