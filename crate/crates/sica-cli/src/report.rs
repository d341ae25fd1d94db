//! Plot-ready CSV reports. Every file starts with a `# sica-version` line;
//! floating-point cells are printed with enough digits to round-trip.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub const VERSION_LINE: &str = "# sica-version 1";

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        let mut s = format!("{v}");
        if !s.contains('.') && !s.contains('e') && !s.contains("inf") {
            s.push_str(".0");
        }
        s
    }
}

/// `fpr_table.csv`: one row per condition, one column per alpha.
pub fn write_fpr_table(
    path: &Path,
    labels: &[(String, f64)],
    alphas: &[f64],
    table: &[Vec<f64>],
) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "{VERSION_LINE}").unwrap();
    let header: Vec<String> = alphas.iter().map(|a| format!("alpha={}", fmt(*a))).collect();
    writeln!(out, "noise,sigma,{}", header.join(",")).unwrap();
    for ((noise, sigma), row) in labels.iter().zip(table) {
        let cells: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        writeln!(out, "{noise},{},{}", fmt(*sigma), cells.join(",")).unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// One row of `roc.csv`.
#[derive(Debug, Clone)]
pub struct RocRow {
    pub fpr: f64,
    pub tpr: f64,
    pub param: f64,
    pub method: &'static str,
    pub seed: u64,
    pub sigma: f64,
    pub noise: String,
}

pub fn write_roc_csv(path: &Path, rows: &[RocRow]) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "{VERSION_LINE}").unwrap();
    writeln!(out, "fpr,tpr,alpha,method,seed,sigma,noise").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(r.fpr),
            fmt(r.tpr),
            fmt(r.param),
            r.method,
            r.seed,
            fmt(r.sigma),
            r.noise
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Per-condition AUC summary appended to the ROC run on stdout and written
/// beside the curve file.
pub fn write_auc_csv(
    path: &Path,
    rows: &[(String, f64, &'static str, f64)],
) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "{VERSION_LINE}").unwrap();
    writeln!(out, "noise,sigma,method,auc").unwrap();
    for (noise, sigma, method, auc) in rows {
        writeln!(out, "{noise},{},{method},{}", fmt(*sigma), fmt(*auc)).unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Consistency report rows.
pub fn write_consistency_csv(
    path: &Path,
    report: &sica_core::eval::ConsistencyReport,
) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "{VERSION_LINE}").unwrap();
    writeln!(out, "# note: {}", report.note).unwrap();
    writeln!(out, "offset,n_time,fpr,tpr,n_selected,mean_matched_correlation").unwrap();
    for run in &report.runs {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            run.offset,
            run.n_time,
            fmt(run.fpr),
            fmt(run.tpr),
            run.n_selected,
            fmt(run.mean_matched_correlation)
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fpr_table_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_fpr_table(
            &path,
            &[("gaussian".to_string(), 0.15), ("supergaussian".to_string(), 0.2)],
            &[0.05, 0.01],
            &[vec![0.04, 0.007], vec![0.052, 0.013]],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], VERSION_LINE);
        assert_eq!(lines[1], "noise,sigma,alpha=0.05,alpha=0.01");
        assert_eq!(lines[2], "gaussian,0.15,0.04,0.007");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.0, 1.0, 0.052, 5e-3, 1.0 / 3.0, 2.575829303548901] {
            let s = fmt(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
