//! Plain-text matrix files.
//!
//! ```text
//! 2 3
//! 1.0000000000000000e0 -2.5000000000000000e-1 0.0000000000000000e0
//! ...
//! ```
//!
//! The header holds `rows cols`; each following line is one row. Values use
//! 17 significant digits, which round-trips every finite `f64` exactly.

use std::fs;
use std::path::Path;

use invlrr::Matrix;

use crate::error::{CliError, CliResult};

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parse a matrix file body; errors are plain messages without a path.
pub fn parse_matrix(text: &str) -> Result<Matrix, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(format!("bad header `{header}`"));
    }
    let rows: usize = dims[0].parse().map_err(|_| format!("bad row count `{}`", dims[0]))?;
    let cols: usize = dims[1].parse().map_err(|_| format!("bad column count `{}`", dims[1]))?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(format!("more than {rows} rows"));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|_| format!("row {}: bad number `{tok}`", i + 1))?);
        }
        if data.len() - before != cols {
            return Err(format!("row {} has {} values, expected {cols}", i + 1, data.len() - before));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(format!("found {seen} rows, expected {rows}"));
    }
    Ok(Matrix::from_row_slice(rows, cols, &data))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    fs::write(path, format_matrix(m)).map_err(|e| CliError::io(path, e))
}

pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text).map_err(|e| CliError::io(path, e))
}
