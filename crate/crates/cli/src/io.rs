//! Dataset CSV files and atomic output writes.

use std::io::Write;
use std::path::Path;

use advreg::Dataset;
use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Shortest exact form: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a CSV with a header row; `target` names the response column and
/// every other column is a feature, in file order.
pub fn read_dataset(path: &Path, target: &str) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Invalid(format!("{}: bad header: {e}", path.display())))?
        .clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let target_idx = names.iter().position(|h| h == target).ok_or_else(|| {
        CliError::Invalid(format!(
            "{}: no column named '{target}' (columns: {})",
            path.display(),
            names.join(", ")
        ))
    })?;
    if names.len() < 2 {
        return Err(CliError::Invalid(format!("{}: no feature columns", path.display())));
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Invalid(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                CliError::Invalid(format!(
                    "{}: line {line}, column '{}': not a number: '{field}'",
                    path.display(),
                    names[col]
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Invalid(format!(
                    "{}: line {line}, column '{}': non-finite value",
                    path.display(),
                    names[col]
                )));
            }
            if col == target_idx {
                y.push(value);
            } else {
                rows.push(value);
            }
        }
    }
    if y.is_empty() {
        return Err(CliError::Invalid(format!("{}: no data rows", path.display())));
    }
    let m = names.len() - 1;
    let x = DMatrix::from_row_slice(y.len(), m, &rows);
    Ok(Dataset::new(x, DVector::from_vec(y))?)
}

pub fn dataset_csv(data: &Dataset) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=data.m()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.x().row(i).iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(data.y()[i]));
        w.write_record(&row).map_err(csv_err)?;
    }
    finish_csv(w)
}

pub(crate) fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<Vec<u8>> {
    w.into_inner()
        .map_err(|e| CliError::Io(format!("csv: {e}")))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = Dataset::from_rows(&[vec![0.1, -2.0], vec![1.0 / 3.0, 4e-12]], &[1.5, -0.7]).unwrap();
        write_atomic(&path, &dataset_csv(&d).unwrap()).unwrap();
        assert_eq!(read_dataset(&path, "y").unwrap(), d);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,y\n1,2\n3,abc\n").unwrap();
        let err = read_dataset(&path, "y").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("'y'"), "{err}");
        std::fs::write(&path, "x1,z\n1,2\n").unwrap();
        assert!(read_dataset(&path, "y").is_err());
        std::fs::write(&path, "x1,y\n1,NaN\n").unwrap();
        assert!(read_dataset(&path, "y").unwrap_err().to_string().contains("non-finite"));
    }

    #[test]
    fn target_column_anywhere() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "resp,a,b\n1,2,3\n4,5,6\n").unwrap();
        let d = read_dataset(&path, "resp").unwrap();
        assert_eq!(d.y().as_slice(), &[1.0, 4.0]);
        assert_eq!(d.x()[(1, 1)], 6.0);
    }
}
