//! Subcommand implementations.

pub mod consistency;
pub mod decompose;
pub mod evaluate;
pub mod roc;
pub mod simulate;
pub mod table1;
pub mod threshold;

use std::path::Path;

use sica_core::datamodel::Grid;
use sica_core::fastica::Contrast;

use crate::error::CliError;

pub fn created_by() -> String {
    concat!("sica ", env!("CARGO_PKG_VERSION")).to_string()
}

pub fn parse_grid(s: &str) -> Result<Grid, CliError> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::usage(format!("grid `{s}` must look like 80x80")))?;
    let height: usize = h
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("grid height `{h}` is not a number")))?;
    let width: usize = w
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("grid width `{w}` is not a number")))?;
    Ok(Grid::new(height, width))
}

pub fn parse_contrast(s: &str) -> Result<Contrast, CliError> {
    match s {
        "logcosh" => Ok(Contrast::LogCosh),
        "cube" => Ok(Contrast::Cube),
        other => Err(CliError::usage(format!(
            "contrast must be `logcosh` or `cube`, got `{other}`"
        ))),
    }
}

pub fn parse_list(s: &str, field: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("{field}: `{tok}` is not a number")))
        })
        .collect()
}

pub fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required (set it on the command line or in --config)")))
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::runtime(format!("creating {}: {e}", path.display())))
}

/// Merge `--config` file values under command-line flags: a flag that was
/// given wins, anything else falls back to the file.
macro_rules! merge_config {
    ($args:ident, $file:ident; $($field:ident),* $(,)?) => {
        $( if $args.$field.is_none() { $args.$field = $file.$field; } )*
    };
}
pub(crate) use merge_config;
