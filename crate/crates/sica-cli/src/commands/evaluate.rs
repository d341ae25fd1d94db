//! `sica evaluate`: score thresholded components against a simulation's
//! ground truth.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sica_core::datamodel::{BoolMat, ComponentSet};
use sica_core::eval;

use super::{created_by, merge_config, require};
use crate::error::CliError;
use crate::io;

#[derive(Debug, Args, Deserialize, Default)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateArgs {
    /// JSON file with the same fields as the flags; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Estimated component matrix (B.sica).
    #[arg(long)]
    pub estimated: Option<PathBuf>,
    /// Estimated supports (supports.sica from `threshold`).
    #[arg(long)]
    pub supports: Option<PathBuf>,
    /// Simulation directory holding sources.sica and supports.sica.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvalRecord {
    permutation: Vec<usize>,
    signs: Vec<f64>,
    correlations: Vec<f64>,
    tp: usize,
    fp: usize,
    tn: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    fpr: f64,
    tpr: f64,
    created_by: String,
}

pub fn run(mut args: EvaluateArgs) -> Result<(), CliError> {
    if let Some(path) = &args.config {
        let file: EvaluateArgs = io::read_json(path)?;
        merge_config!(args, file; estimated, supports, truth, out);
    }
    let estimated = require(args.estimated, "estimated")?;
    let supports = require(args.supports, "supports")?;
    let truth_dir = require(args.truth, "truth")?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("eval.json"));

    let est_patterns = io::read_matrix(&estimated)?;
    let est_supports = BoolMat::from_mat(&io::read_matrix(&supports)?);
    let true_sources = io::read_matrix(&truth_dir.join("sources.sica"))?;
    let true_supports = BoolMat::from_mat(&io::read_matrix(&truth_dir.join("supports.sica"))?);

    let est = ComponentSet::new(est_patterns, None, None, false)?;
    let matched = eval::match_components(&est, &true_sources)?;
    let aligned = eval::align_supports(&est_supports, &matched.permutation);
    let c = eval::confusion(&aligned, &true_supports)?;

    let record = EvalRecord {
        permutation: matched.permutation.clone(),
        signs: matched.signs.clone(),
        correlations: matched.correlations.clone(),
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        fpr: c.fpr(),
        tpr: c.tpr(),
        created_by: created_by(),
    };
    io::write_json(&record, &out)?;
    println!(
        "evaluate: fpr={:.6} tpr={:.6} (tp={} fp={} tn={} fn={}) -> {}",
        c.fpr(),
        c.tpr(),
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        out.display()
    );
    Ok(())
}
