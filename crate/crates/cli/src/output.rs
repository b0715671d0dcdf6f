//! Deterministic file writers. All numbers use Rust's shortest round-trip
//! formatting, so identical values always serialize to identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()
}

/// Write a CSV table. Fields are numeric or bare identifiers, so no quoting
/// is needed.
pub fn write_csv<H, R>(path: &Path, header: &[H], rows: R) -> std::io::Result<()>
where
    H: AsRef<str>,
    R: IntoIterator<Item = Vec<String>>,
{
    let mut file = BufWriter::new(File::create(path)?);
    let header: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    writeln!(file, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(file, "{}", row.join(","))?;
    }
    file.flush()
}

pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

pub fn fmt_opt_f64(value: Option<f64>) -> String {
    value.map_or_else(String::new, fmt_f64)
}
