//! Triplet and matrix CSV formats.
//!
//! Triplets: one `anchor,near,far` line per comparison, 0-based item
//! indices, with an optional `a,i,j` header. Matrices: one row per line,
//! comma-separated decimals written with 17 significant digits so that a
//! save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{LoreError, Result};
use crate::model::{Embedding, Triplet, TripletSet};

pub const TRIPLET_HEADER: &str = "a,i,j";

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn format_error(line: usize, message: impl Into<String>) -> LoreError {
    LoreError::DataFormat {
        line,
        message: message.into(),
    }
}

fn is_header(record: &csv::StringRecord) -> bool {
    record.len() == 3 && record.iter().all(|f| !f.is_empty() && f.chars().all(char::is_alphabetic))
}

/// Parses triplet CSV text. Index and degeneracy errors report the 1-based
/// line number as their `position`.
pub fn parse_triplets(text: &str, n_items: usize) -> Result<TripletSet> {
    let mut triplets = Vec::new();
    for (k, record) in reader(text).records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| format_error(line, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && is_header(&record) {
            continue;
        }
        if record.len() != 3 {
            return Err(format_error(line, format!("expected 3 fields, found {}", record.len())));
        }
        let mut idx = [0usize; 3];
        for (slot, field) in idx.iter_mut().zip(record.iter()) {
            *slot = field
                .parse()
                .map_err(|_| format_error(line, format!("'{field}' is not an item index")))?;
        }
        let t = Triplet::new(idx[0], idx[1], idx[2]);
        if let Err(e) = crate::model::validate_triplet_set(&[t], n_items) {
            return Err(match e {
                LoreError::IndexOutOfRange { n_items, .. } => LoreError::IndexOutOfRange { position: line, n_items },
                LoreError::DegenerateTriplet { .. } => LoreError::DegenerateTriplet { position: line },
                other => other,
            });
        }
        triplets.push(t);
    }
    TripletSet::new(triplets, n_items)
}

pub fn load_triplets_csv(path: impl AsRef<Path>, n_items: usize) -> Result<TripletSet> {
    parse_triplets(&fs::read_to_string(path)?, n_items)
}

pub fn format_triplets(ts: &TripletSet) -> String {
    let mut out = String::with_capacity(ts.len() * 12 + 6);
    out.push_str(TRIPLET_HEADER);
    out.push('\n');
    for t in ts {
        let _ = writeln!(out, "{},{},{}", t.anchor, t.near, t.far);
    }
    out
}

pub fn save_triplets_csv(ts: &TripletSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_triplets(ts))?;
    Ok(())
}

/// Parses a dense real matrix; the shape comes from the row and column counts.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (k, record) in reader(text).records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| format_error(line, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(format_error(line, format!("expected {c} columns, found {}", record.len())));
            }
            Some(_) => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| format_error(line, format!("'{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(format_error(line, format!("non-finite value '{field}'")));
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| format_error(1, "empty matrix file"))?;
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 25);
    for row in m.row_iter() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn save_matrix_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn save_embedding_csv(z: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    save_matrix_csv(z.matrix(), path)
}
