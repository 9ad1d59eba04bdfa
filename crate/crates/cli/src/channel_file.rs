//! Channel description files.
//!
//! ```json
//! { "dim": 4, "kraus": [ [[[1, 0], [0, 0], [0, 0], [0, 0]], ...], ... ] }
//! ```
//!
//! `kraus` is a list of `dim x dim` matrices in row-major order, each entry
//! a `[re, im]` pair. `dim` is 4 for two-qubit channels and 2 for the
//! single-qubit factors of a product channel.

use std::path::Path;

use nalgebra::DMatrix;
use qst_core::quantum::{max_abs, CPTP_TOL};
use qst_core::{validate_cptp, BipartiteChannel, Error, Mat2, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

impl ChannelFile {
    pub fn from_matrices(dim: usize, kraus: &[DMatrix<C64>]) -> Self {
        Self {
            dim,
            kraus: kraus
                .iter()
                .map(|k| {
                    (0..k.nrows())
                        .map(|r| {
                            (0..k.ncols())
                                .map(|c| [k[(r, c)].re, k[(r, c)].im])
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn load(path: &Path) -> Result<ChannelFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(path, e.to_string()))?;
    parse_str(&text).map_err(|m| parse_err(path, m))
}

/// Parses the file text into matrices, with line/field diagnostics.
pub fn parse_str(text: &str) -> Result<ChannelFile, String> {
    let file: ChannelFile = serde_json::from_str(text)
        .map_err(|e| format!("line {} column {}: {}", e.line(), e.column(), e))?;
    if file.kraus.is_empty() {
        return Err("field 'kraus': empty Kraus list".into());
    }
    for (k, m) in file.kraus.iter().enumerate() {
        for (r, row) in m.iter().enumerate() {
            for (c, z) in row.iter().enumerate() {
                if !z[0].is_finite() || !z[1].is_finite() {
                    return Err(format!("field 'kraus[{k}][{r}][{c}]': non-finite entry"));
                }
            }
        }
    }
    Ok(file)
}

fn to_matrices(file: &ChannelFile) -> Result<Vec<DMatrix<C64>>, qst_core::Error> {
    file.kraus
        .iter()
        .map(|m| {
            let rows = m.len();
            let cols = m.first().map_or(0, |r| r.len());
            if rows != file.dim || m.iter().any(|r| r.len() != file.dim) {
                return Err(Error::WrongDimension {
                    expected: file.dim,
                    rows,
                    cols,
                });
            }
            Ok(DMatrix::from_fn(rows, cols, |r, c| {
                C64::new(m[r][c][0], m[r][c][1])
            }))
        })
        .collect()
}

/// Reads and validates a two-qubit channel file.
pub fn parse_channel_file(path: &Path) -> Result<BipartiteChannel, CliError> {
    let file = load(path)?;
    if file.dim != 4 {
        return Err(Error::WrongDimension {
            expected: 4,
            rows: file.dim,
            cols: file.dim,
        }
        .into());
    }
    Ok(validate_cptp(&to_matrices(&file)?)?)
}

/// Reads a single-qubit Kraus set (`dim = 2`) and checks completeness.
pub fn parse_qubit_kraus_file(path: &Path) -> Result<Vec<Mat2>, CliError> {
    let file = load(path)?;
    if file.dim != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            rows: file.dim,
            cols: file.dim,
        }
        .into());
    }
    let kraus: Vec<Mat2> = to_matrices(&file)?
        .iter()
        .map(|m| Mat2::from_fn(|r, c| m[(r, c)]))
        .collect();
    let sum = kraus
        .iter()
        .fold(Mat2::zeros(), |acc, k| acc + k.adjoint() * k);
    let deviation = max_abs(&(sum - Mat2::identity()));
    if deviation > CPTP_TOL {
        return Err(Error::NotTracePreserving { deviation }.into());
    }
    Ok(kraus)
}
