//! The `SICA1` portable matrix format and its JSON metadata sidecars.
//!
//! A file is an ASCII magic line `SICA1 <rows> <cols>\n` followed by the
//! row-major matrix entries as IEEE-754 little-endian 64-bit values.
//! Spatial maps are flattened row-major from their (height, width) grid;
//! that order is part of the contract. Round-tripping any finite matrix is
//! bit-exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sica_core::Mat;

pub const MAGIC: &str = "SICA1";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a SICA matrix file (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported format version `{found}` (this build reads {MAGIC})")]
    UnsupportedVersion { path: PathBuf, found: String },
    #[error("{path}: malformed header line")]
    BadHeader { path: PathBuf },
    #[error("{path}: payload holds {got} values but header declares {expected}")]
    PayloadMismatch {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("{path}: matrix contains non-finite values")]
    NonFinite { path: PathBuf },
    #[error("refusing to write non-finite values to {path}")]
    NonFiniteWrite { path: PathBuf },
    #[error("{path}: dimensions {rows}x{cols} overflow")]
    DimensionOverflow {
        path: PathBuf,
        rows: usize,
        cols: usize,
    },
    #[error("{path}: {context}: {source}")]
    Json {
        path: PathBuf,
        context: &'static str,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a matrix in `SICA1` format. Non-finite entries are rejected
/// before anything touches the disk.
pub fn write_matrix(m: &Mat, path: &Path) -> Result<(), IoError> {
    if !m.is_finite() {
        return Err(IoError::NonFiniteWrite {
            path: path.to_path_buf(),
        });
    }
    let mut buf = Vec::with_capacity(32 + m.data().len() * 8);
    write!(buf, "{MAGIC} {} {}\n", m.rows(), m.cols()).expect("in-memory write");
    for &v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// Read a `SICA1` matrix file.
pub fn read_matrix(path: &Path) -> Result<Mat, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let newline = bytes
        .iter()
        .take(128)
        .position(|&b| b == b'\n')
        .ok_or_else(|| IoError::BadMagic {
            path: path.to_path_buf(),
        })?;
    let header = core::str::from_utf8(&bytes[..newline]).map_err(|_| IoError::BadMagic {
        path: path.to_path_buf(),
    })?;
    let mut tokens = header.split_ascii_whitespace();
    let magic = tokens.next().unwrap_or("");
    if magic != MAGIC {
        if magic.starts_with("SICA") {
            return Err(IoError::UnsupportedVersion {
                path: path.to_path_buf(),
                found: magic.to_string(),
            });
        }
        return Err(IoError::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let parse_dim = |tok: Option<&str>| -> Result<usize, IoError> {
        tok.and_then(|t| t.parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| IoError::BadHeader {
                path: path.to_path_buf(),
            })
    };
    let rows = parse_dim(tokens.next())?;
    let cols = parse_dim(tokens.next())?;
    if tokens.next().is_some() {
        return Err(IoError::BadHeader {
            path: path.to_path_buf(),
        });
    }
    let expected = rows
        .checked_mul(cols)
        .filter(|&n| n <= (isize::MAX as usize) / 8)
        .ok_or_else(|| IoError::DimensionOverflow {
            path: path.to_path_buf(),
            rows,
            cols,
        })?;

    let payload = &bytes[newline + 1..];
    if payload.len() != expected * 8 {
        return Err(IoError::PayloadMismatch {
            path: path.to_path_buf(),
            expected,
            got: payload.len() / 8,
        });
    }
    let mut data = Vec::with_capacity(expected);
    for chunk in payload.chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().expect("chunk of 8")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(IoError::NonFinite {
            path: path.to_path_buf(),
        });
    }
    Ok(Mat::from_vec(rows, cols, data))
}

/// Metadata sidecar written next to matrices as `<path>.json`.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct MatrixMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub created_by: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<(usize, usize)>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

pub fn write_sidecar(path: &Path, meta: &MatrixMeta) -> Result<(), IoError> {
    let sidecar = sidecar_path(path);
    let body = serde_json::to_vec_pretty(meta).map_err(|source| IoError::Json {
        path: sidecar.clone(),
        context: "serializing sidecar",
        source,
    })?;
    fs::write(&sidecar, body).map_err(io_err(&sidecar))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut body = serde_json::to_vec_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        context: "serializing",
        source,
    })?;
    body.push(b'\n');
    fs::write(path, body).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        context: "parsing",
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sica_core::rng;

    fn tmpfile(name: &str) -> PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // Keep the directory alive by leaking it; tests are short-lived.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn identity_round_trips_with_documented_layout() {
        let path = tmpfile("id.sica");
        let m = Mat::identity(2);
        write_matrix(&m, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        // Header "SICA1 2 2\n" plus 4 little-endian doubles.
        assert!(bytes.starts_with(b"SICA1 2 2\n"));
        assert_eq!(bytes.len(), "SICA1 2 2\n".len() + 32);
        assert_eq!(read_matrix(&path).unwrap(), m);
    }

    #[test]
    fn single_zero_and_zero_matrix_round_trip() {
        let path = tmpfile("zero.sica");
        let m = Mat::from_vec(1, 1, vec![0.0]);
        write_matrix(&m, &path).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), m);

        let z = Mat::zeros(3, 4);
        write_matrix(&z, &path).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), z);
    }

    #[test]
    fn random_matrix_round_trips_bit_exactly() {
        let path = tmpfile("rand.sica");
        let m = rng::normal_matrix(80, 80, 7);
        write_matrix(&m, &path).unwrap();
        let back = read_matrix(&path).unwrap();
        for (a, b) in m.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn future_version_is_a_distinct_error() {
        let path = tmpfile("v2.sica");
        fs::write(&path, b"SICA2 1 1\n01234567").unwrap();
        assert!(matches!(
            read_matrix(&path).unwrap_err(),
            IoError::UnsupportedVersion { found, .. } if found == "SICA2"
        ));
    }

    #[test]
    fn bad_magic_and_bad_header_are_rejected() {
        let path = tmpfile("junk.sica");
        fs::write(&path, b"hello world\n").unwrap();
        assert!(matches!(
            read_matrix(&path).unwrap_err(),
            IoError::BadMagic { .. }
        ));

        fs::write(&path, b"SICA1 2\n").unwrap();
        assert!(matches!(
            read_matrix(&path).unwrap_err(),
            IoError::BadHeader { .. }
        ));

        fs::write(&path, b"SICA1 0 4\n").unwrap();
        assert!(matches!(
            read_matrix(&path).unwrap_err(),
            IoError::BadHeader { .. }
        ));
    }

    #[test]
    fn truncated_payload_is_detected() {
        let path = tmpfile("trunc.sica");
        let m = Mat::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        write_matrix(&m, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8); // one value short
        fs::write(&path, bytes).unwrap();
        match read_matrix(&path).unwrap_err() {
            IoError::PayloadMismatch { expected, got, .. } => {
                assert_eq!(expected, 4);
                assert_eq!(got, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_finite_values_never_touch_disk_and_never_load() {
        let path = tmpfile("nan.sica");
        let m = Mat::from_vec(1, 2, vec![1.0, f64::NAN]);
        assert!(matches!(
            write_matrix(&m, &path).unwrap_err(),
            IoError::NonFiniteWrite { .. }
        ));
        assert!(!path.exists());

        // Hand-craft a file holding an infinity.
        let mut bytes = b"SICA1 1 1\n".to_vec();
        bytes.extend_from_slice(&f64::INFINITY.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_matrix(&path).unwrap_err(),
            IoError::NonFinite { .. }
        ));
    }

    #[test]
    fn sidecar_serializes_next_to_the_matrix() {
        let path = tmpfile("m.sica");
        let meta = MatrixMeta {
            seed: Some(42),
            created_by: "sica-test".to_string(),
            grid: Some((8, 10)),
        };
        write_sidecar(&path, &meta).unwrap();
        let loaded: MatrixMeta = read_json(&sidecar_path(&path)).unwrap();
        assert_eq!(loaded.seed, Some(42));
        assert_eq!(loaded.grid, Some((8, 10)));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn any_finite_matrix_round_trips_bitwise(
                rows in 1usize..12,
                cols in 1usize..12,
                raw in proptest::collection::vec(
                    proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL
                        | proptest::num::f64::ZERO,
                    144,
                ),
            ) {
                let data: Vec<f64> = raw[..rows * cols].to_vec();
                let m = Mat::from_vec(rows, cols, data);
                let path = tmpfile("prop.sica");
                write_matrix(&m, &path).unwrap();
                let back = read_matrix(&path).unwrap();
                prop_assert_eq!(m.rows(), back.rows());
                prop_assert_eq!(m.cols(), back.cols());
                for (a, b) in m.data().iter().zip(back.data()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }
}
