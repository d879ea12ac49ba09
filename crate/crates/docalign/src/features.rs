//! Whitespace-separated feature tables: a `<count> <dim>` header line, then
//! one `<id> <v1> ... <vdim>` line per entry.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use docalign_core::corpus::FeatureTable;

use crate::error::{Error, Result};

pub fn load_feature_table(path: &Path) -> Result<FeatureTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_feature_table(BufReader::new(file), path)
}

/// Parses a table from `reader`; `origin` only labels error messages.
pub fn read_feature_table(reader: impl BufRead, origin: &Path) -> Result<FeatureTable> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, Ok(line))) if line.trim().is_empty() => continue,
            Some((_, Ok(line))) => break line,
            Some((i, Err(e))) => return Err(Error::parse(origin, i + 1, e.to_string())),
            None => return Err(Error::parse(origin, 1, "missing header")),
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) => (c, d),
            _ => return Err(Error::parse(origin, 1, format!("malformed header {header:?}"))),
        },
        _ => return Err(Error::parse(origin, 1, format!("malformed header {header:?}"))),
    };
    let mut table = FeatureTable::new(dim)?;
    let mut values = Vec::with_capacity(dim);
    for (i, line) in lines {
        let line = line.map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        let mut parts = line.split_whitespace();
        let Some(id) = parts.next() else { continue };
        values.clear();
        for token in parts {
            let v: f64 = token.parse().map_err(|_| Error::parse(origin, i + 1, format!("bad number {token:?}")))?;
            values.push(v);
        }
        table.insert(id, &values).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
    }
    if table.len() != count {
        return Err(Error::CountMismatch { path: origin.to_owned(), expected: count, found: table.len() });
    }
    Ok(table)
}

/// Writes `table` so that [`read_feature_table`] reproduces every value
/// exactly.
pub fn write_feature_table(mut out: impl Write, table: &FeatureTable) -> std::io::Result<()> {
    writeln!(out, "{} {}", table.len(), table.dim())?;
    for (id, values) in table.iter() {
        write!(out, "{id}")?;
        for v in values {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn save_feature_table(path: &Path, table: &FeatureTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_feature_table(BufWriter::new(file), table).map_err(|e| Error::io(path, e))
}
