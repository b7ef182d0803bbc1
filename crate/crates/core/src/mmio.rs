//! MatrixMarket coordinate files for symmetric matrices and plain vector files.
//!
//! Matrices use the `%%MatrixMarket matrix coordinate real symmetric` header with
//! 1-indexed lower-triangle entries `i j value`. A matrix whose entries all sit on
//! the diagonal is returned as [`Operator::Diagonal`]. Right-hand sides are one
//! value per line; blank lines and `%` comments are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::linalg::{Matrix, Vector};
use crate::quadmodel::Operator;
use crate::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_symmetric(path: &Path) -> Result<Operator> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_symmetric(&text).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub fn read_vector(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_vector(&text).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

type ParseResult<T> = std::result::Result<T, (usize, String)>;

pub fn parse_symmetric(text: &str) -> ParseResult<Operator> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (_, header) = lines.next().ok_or((1, "empty file".to_string()))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens != ["%%matrixmarket", "matrix", "coordinate", "real", "symmetric"] {
        return Err((1, format!("unsupported header {header:?}, expected {HEADER:?}")));
    }

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body.next().ok_or((1, "missing size line".to_string()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| (size_line, format!("bad size line: {e}")))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err((size_line, "size line needs `rows cols entries`".into()));
    };
    if rows != cols || rows == 0 {
        return Err((size_line, format!("symmetric matrix must be square, got {rows}x{cols}")));
    }

    let mut entries = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashSet::with_capacity(nnz);
    for (line, l) in body {
        let mut it = l.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err((line, "entry needs `i j value`".into()));
        };
        let i: usize = i.parse().map_err(|e| (line, format!("bad row index: {e}")))?;
        let j: usize = j.parse().map_err(|e| (line, format!("bad column index: {e}")))?;
        let v: f64 = v.parse().map_err(|e| (line, format!("bad value: {e}")))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err((line, format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        if i < j {
            return Err((line, format!("entry ({i}, {j}) is above the diagonal")));
        }
        if !seen.insert((i, j)) {
            return Err((line, format!("duplicate entry ({i}, {j})")));
        }
        entries.push((i - 1, j - 1, v));
    }
    if entries.len() != nnz {
        return Err((
            text.lines().count(),
            format!("expected {nnz} entries, found {}", entries.len()),
        ));
    }

    if entries.iter().all(|&(i, j, _)| i == j) {
        let mut d = Vector::zeros(rows);
        for (i, _, v) in entries {
            d[i] = v;
        }
        return Ok(Operator::Diagonal(d));
    }
    let mut m = Matrix::zeros(rows, cols);
    for (i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(Operator::Dense(m))
}

pub fn parse_vector(text: &str) -> ParseResult<Vector> {
    let values = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
        .map(|(line, l)| l.parse::<f64>().map_err(|e| (line, format!("bad value {l:?}: {e}"))))
        .collect::<ParseResult<Vec<f64>>>()?;
    if values.is_empty() {
        return Err((1, "vector file has no values".into()));
    }
    Ok(Vector::from_vec(values))
}

/// Lower-triangle coordinate text for `op`; structural zeros are omitted.
pub fn format_symmetric(op: &Operator) -> String {
    let n = op.dim();
    let mut entries = Vec::new();
    match op {
        Operator::Diagonal(d) => {
            entries.extend(d.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, i, *v)));
        }
        Operator::Dense(m) => {
            for j in 0..n {
                for i in j..n {
                    if m[(i, j)] != 0.0 {
                        entries.push((i, j, m[(i, j)]));
                    }
                }
            }
        }
    }
    let mut out = format!("{HEADER}\n{n} {n} {}\n", entries.len());
    for (i, j, v) in entries {
        out.push_str(&format!("{} {} {v:e}\n", i + 1, j + 1));
    }
    out
}

pub fn format_vector(v: &Vector) -> String {
    v.iter().map(|x| format!("{x:e}\n")).collect()
}

pub fn write_symmetric(op: &Operator, path: &Path) -> Result<()> {
    write_all(path, format_symmetric(op).as_bytes())
}

pub fn write_vector(v: &Vector, path: &Path) -> Result<()> {
    write_all(path, format_vector(v).as_bytes())
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}
