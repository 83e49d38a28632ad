//! CSV matrices, JSON patches and all-or-nothing output files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Matrix, Result};

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        // drop the sign of negative zero so round trips diff cleanly
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn parse_matrix_csv(text: &str) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Shape(format!("row {}: cannot parse {field:?} as a number", i + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Shape("empty matrix".into()));
    }
    Matrix::from_rows(&rows)
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|&v| format_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Reads a matrix from a CSV file, or from a JSON array of arrays when the
/// file name ends in `.json`.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
        if rows.is_empty() {
            return Err(Error::Shape("empty matrix".into()));
        }
        Matrix::from_rows(&rows)
    } else {
        parse_matrix_csv(&text)
    }
}

/// Writes `contents` to `path` via a sibling temporary file and a rename, so
/// a failed write never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other("output path has no file name")))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = Matrix::from_rows(&[[0.1, -1.0 / 3.0], [1e-300, std::f64::consts::PI]]).unwrap();
        assert_eq!(parse_matrix_csv(&matrix_to_csv(&m)).unwrap(), m);
    }

    #[test]
    fn ragged_csv_rejected() {
        assert!(parse_matrix_csv("1,2\n3\n").is_err());
        assert!(parse_matrix_csv("1,x\n").is_err());
        assert!(parse_matrix_csv("").is_err());
    }

    #[test]
    fn negative_zero_prints_plain() {
        assert_eq!(format_f64(-0.0), "0");
        assert_eq!(format_f64(0.25), "0.25");
    }
}
