// SPDX-License-Identifier: MIT OR Apache-2.0

//! Single-column CSV input and numeric formatting.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Reads one value per row; a first row reading `x` is taken as the header.
pub fn read_series(path: &Path) -> Result<Vec<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record =
            record.map_err(|e| CliError::io(format!("{}: line {line}: {e}", path.display())))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 1 {
            return Err(CliError::io(format!(
                "{}: line {line}: expected one column, found {}",
                path.display(),
                record.len()
            )));
        }
        let field = &record[0];
        if line == 1 && field.eq_ignore_ascii_case("x") {
            continue;
        }
        let v: f64 = field.parse().map_err(|_| {
            CliError::io(format!(
                "{}: line {line}: '{field}' is not a number",
                path.display()
            ))
        })?;
        if !v.is_finite() {
            return Err(CliError::data(format!(
                "{}: line {line}: non-finite value '{field}'",
                path.display()
            )));
        }
        values.push(v);
    }
    Ok(values)
}

/// Writes `values` as a single column with header `x`, full precision.
pub fn write_series<W: Write>(out: W, values: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::io(e.to_string());
    w.write_record(["x"]).map_err(io)?;
    for v in values {
        w.write_record([v.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))
}

/// `digits` significant digits; 0 prints the shortest round-trip form.
pub fn fmt_num(v: f64, digits: usize) -> String {
    if !v.is_finite() || digits == 0 {
        return if v.is_infinite() && v > 0.0 {
            "inf".to_string()
        } else {
            v.to_string()
        };
    }
    let rounded: f64 = format!("{:.*e}", digits - 1, v).parse().unwrap_or(v);
    rounded.to_string()
}
