//! Matrix Market I/O.
//!
//! Supported formats:
//!
//! * `matrix coordinate real general` — [`SparseMatrix`]
//! * `matrix coordinate real symmetric` — [`SymmetricSparse`], lower triangle
//! * `matrix array real general` with a single column — dense vectors
//!
//! Files use 1-based indices; everything in memory is 0-based, converted at
//! this boundary only. The writers emit entries sorted by column then row so
//! that identical matrices serialize to identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, SymmetricSparse};

/// Any object a Matrix Market file in the supported subset can hold.
#[derive(Debug)]
pub enum MarketObject {
    General(SparseMatrix),
    Symmetric(SymmetricSparse),
    Vector(Vec<f64>),
}

pub fn write_general(path: &Path, m: &SparseMatrix) -> Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let triples = m.canonical_triples();
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), triples.len()).unwrap();
    for (r, c, v) in triples {
        writeln!(out, "{} {} {:e}", r + 1, c + 1, v).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_symmetric(path: &Path, m: &SymmetricSparse) -> Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let triples = m.canonical();
    writeln!(out, "{} {} {}", m.dim(), m.dim(), triples.len()).unwrap();
    for &(r, c, v) in triples {
        writeln!(out, "{} {} {:e}", r + 1, c + 1, v).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix array real general\n");
    writeln!(out, "{} 1", v.len()).unwrap();
    for x in v {
        writeln!(out, "{:e}", x).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_general(path: &Path) -> Result<SparseMatrix> {
    match read_any(path)? {
        MarketObject::General(m) => Ok(m),
        other => Err(wrong_kind(path, "coordinate real general", &other)),
    }
}

pub fn read_symmetric(path: &Path) -> Result<SymmetricSparse> {
    match read_any(path)? {
        MarketObject::Symmetric(m) => Ok(m),
        other => Err(wrong_kind(path, "coordinate real symmetric", &other)),
    }
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    match read_any(path)? {
        MarketObject::Vector(v) => Ok(v),
        other => Err(wrong_kind(path, "array real general (one column)", &other)),
    }
}

fn wrong_kind(path: &Path, expected: &str, got: &MarketObject) -> Error {
    let kind = match got {
        MarketObject::General(_) => "coordinate general",
        MarketObject::Symmetric(_) => "coordinate symmetric",
        MarketObject::Vector(_) => "array",
    };
    Error::BadInstance(format!(
        "{}: expected {}, found {}",
        path.display(),
        expected,
        kind
    ))
}

/// Reads any supported Matrix Market object, dispatching on the header.
pub fn read_any(path: &Path) -> Result<MarketObject> {
    let text = fs::read_to_string(path)?;
    parse(&text)
}

fn parse(text: &str) -> Result<MarketObject> {
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header_fields: Vec<String> = header
        .split_whitespace()
        .map(|f| f.to_ascii_lowercase())
        .collect();
    if header_fields.len() < 5 || header_fields[0] != "%%matrixmarket" {
        return Err(parse_err(1, "expected a %%MatrixMarket header"));
    }
    if header_fields[1] != "matrix" || header_fields[3] != "real" {
        return Err(parse_err(1, "only `matrix ... real` objects are supported"));
    }
    let layout = header_fields[2].as_str();
    let symmetry = header_fields[4].as_str();

    // Skip comments and blank lines up to the size line.
    let mut size_line = None;
    for (idx, line) in lines.by_ref() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, trimmed.to_string()));
        break;
    }
    let (size_lineno, size_text) = size_line.ok_or_else(|| parse_err(1, "missing size line"))?;

    let remaining = lines.filter_map(|(idx, line)| {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            None
        } else {
            Some((idx + 1, trimmed))
        }
    });

    match (layout, symmetry) {
        ("coordinate", "general") => {
            let (nrows, ncols, nnz) = parse_size3(size_lineno, &size_text)?;
            let entries = parse_entries(remaining, nnz, nrows, ncols, false)?;
            SparseMatrix::from_triplets(nrows, ncols, entries).map(MarketObject::General)
        }
        ("coordinate", "symmetric") => {
            let (nrows, ncols, nnz) = parse_size3(size_lineno, &size_text)?;
            if nrows != ncols {
                return Err(parse_err(size_lineno, "symmetric matrix must be square"));
            }
            let entries = parse_entries(remaining, nnz, nrows, ncols, true)?;
            SymmetricSparse::from_triplets(nrows, entries).map(MarketObject::Symmetric)
        }
        ("array", "general") => {
            let (nrows, ncols) = parse_size2(size_lineno, &size_text)?;
            if ncols != 1 {
                return Err(parse_err(
                    size_lineno,
                    "array objects are only supported with one column",
                ));
            }
            let mut values = Vec::with_capacity(nrows);
            for (lineno, line) in remaining {
                if values.len() == nrows {
                    return Err(parse_err(lineno, "more values than the size line declares"));
                }
                let v: f64 = line
                    .parse()
                    .map_err(|_| parse_err(lineno, "expected a real value"))?;
                values.push(v);
            }
            if values.len() != nrows {
                return Err(parse_err(
                    size_lineno,
                    &format!("expected {} values, found {}", nrows, values.len()),
                ));
            }
            Ok(MarketObject::Vector(values))
        }
        _ => Err(parse_err(
            1,
            &format!("unsupported format `{} real {}`", layout, symmetry),
        )),
    }
}

fn parse_entries<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    nnz: usize,
    nrows: usize,
    ncols: usize,
    lower_only: bool,
) -> Result<Vec<(usize, usize, f64)>> {
    let mut entries = Vec::with_capacity(nnz);
    let mut last_lineno = 0;
    for (lineno, line) in lines {
        last_lineno = lineno;
        if entries.len() == nnz {
            return Err(parse_err(
                lineno,
                "more entries than the size line declares",
            ));
        }
        let mut fields = line.split_whitespace();
        let r: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| parse_err(lineno, "expected a row index"))?;
        let c: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| parse_err(lineno, "expected a column index"))?;
        let v: f64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| parse_err(lineno, "expected a real value"))?;
        if fields.next().is_some() {
            return Err(parse_err(lineno, "trailing fields on entry line"));
        }
        if r == 0 || c == 0 || r > nrows || c > ncols {
            return Err(parse_err(
                lineno,
                &format!("index ({}, {}) outside {} x {}", r, c, nrows, ncols),
            ));
        }
        if lower_only && r < c {
            return Err(parse_err(
                lineno,
                "symmetric files must store the lower triangle (row >= col)",
            ));
        }
        entries.push((r - 1, c - 1, v));
    }
    if entries.len() != nnz {
        return Err(parse_err(
            last_lineno,
            &format!("expected {} entries, found {}", nnz, entries.len()),
        ));
    }
    Ok(entries)
}

fn parse_size3(lineno: usize, text: &str) -> Result<(usize, usize, usize)> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(lineno, "size line must read `nrows ncols nnz`"));
    }
    let parse = |f: &str| {
        f.parse::<usize>()
            .map_err(|_| parse_err(lineno, "bad size field"))
    };
    Ok((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?))
}

fn parse_size2(lineno: usize, text: &str) -> Result<(usize, usize)> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(lineno, "size line must read `nrows ncols`"));
    }
    let parse = |f: &str| {
        f.parse::<usize>()
            .map_err(|_| parse_err(lineno, "bad size field"))
    };
    Ok((parse(fields[0])?, parse(fields[1])?))
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}
