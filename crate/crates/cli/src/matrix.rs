//! Plain-text square matrices for `certify`.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, Result};

/// One row per line, entries separated by whitespace and/or commas. Blank
/// lines and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|tok| !tok.is_empty())
            .map(|tok| tok.parse::<f64>().map_err(|_| format!("line {}: `{tok}` is not a number", lineno + 1)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format!("line {}: expected {} entries, found {}", lineno + 1, first.len(), row.len()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no rows".into());
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text).map_err(|reason| CliError::Matrix { path: path.to_path_buf(), reason })
}
