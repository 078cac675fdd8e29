//! Text vector files: a `dim N` header line followed by N whitespace-separated
//! reals (written one per line).

use std::io::Write;
use std::path::Path;

use super::{check_uniform_counts, class_dirs, class_files, LabeledDataset};
use crate::error::{Error, Result};

pub const VECTOR_EXTENSION: &str = "vec";

pub fn write_vector<W: Write>(out: &mut W, v: &[f64]) -> std::io::Result<()> {
    writeln!(out, "dim {}", v.len())?;
    for x in v {
        writeln!(out, "{x}")?;
    }
    Ok(())
}

pub fn write_vector_file(path: &Path, v: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(v.len() * 4 + 16);
    write_vector(&mut buf, v)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn parse_vector(text: &str) -> std::result::Result<Vec<f64>, String> {
    let mut tokens = text.split_ascii_whitespace();
    if tokens.next() != Some("dim") {
        return Err("missing `dim` header".into());
    }
    let n: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or("invalid dimension in header")?;
    let values = tokens
        .map(|t| t.parse::<f64>().map_err(|_| format!("invalid value {t:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(format!("header says {n} values, found {}", values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("non-finite value".into());
    }
    Ok(values)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_vector(&text).map_err(|reason| Error::InvalidDataset(format!("{}: {reason}", path.display())))
}

/// Reads a `<root>/<class>/<name>.vec` tree, same ordering rules as image trees.
pub fn load_vector_dir(root: &Path) -> Result<LabeledDataset> {
    let mut classes = Vec::new();
    for dir in class_dirs(root)? {
        let vectors = class_files(&dir, &[VECTOR_EXTENSION])?
            .iter()
            .map(|p| read_vector(p))
            .collect::<Result<Vec<_>>>()?;
        classes.push(vectors);
    }
    check_uniform_counts(&classes.iter().map(Vec::len).collect::<Vec<_>>())?;
    LabeledDataset::new(classes)
}
