use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

/// Loads a numeric CSV table.
///
/// `feature_cols` empty means "every column except `label_col`". A first row
/// that does not parse as numbers is treated as a header and skipped. Label
/// cells must hold non-negative integers; the class count is `max + 1`.
pub fn load_csv(path: impl AsRef<Path>, feature_cols: &[usize], label_col: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let mut width = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut cols: Vec<usize> = feature_cols.to_vec();

    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let row: Vec<&str> = record.iter().collect();
        let expected = *width.get_or_insert(row.len());
        if row.len() != expected {
            return Err(Error::Data(format!(
                "{}:{}: ragged row with {} cells, expected {expected}",
                path.display(),
                line + 1,
                row.len()
            )));
        }
        if line == 0 {
            if label_col >= row.len() {
                return Err(Error::Data(format!(
                    "label column {label_col} out of range for {} columns",
                    row.len()
                )));
            }
            if cols.is_empty() {
                cols = (0..row.len()).filter(|&c| c != label_col).collect();
            }
            if let Some(&c) = cols.iter().find(|&&c| c >= row.len()) {
                return Err(Error::Data(format!(
                    "feature column {c} out of range for {} columns",
                    row.len()
                )));
            }
            if row.iter().any(|cell| cell.parse::<f64>().is_err()) {
                continue;
            }
        }
        let parse = |c: usize| -> Result<f64> {
            row[c].parse::<f64>().map_err(|_| {
                Error::Data(format!(
                    "{}:{}: non-numeric cell {:?} in column {c}",
                    path.display(),
                    line + 1,
                    row[c]
                ))
            })
        };
        for &c in &cols {
            features.push(parse(c)?);
        }
        let y = parse(label_col)?;
        if y < 0.0 || y.fract() != 0.0 || y > u32::MAX as f64 {
            return Err(Error::Data(format!(
                "{}:{}: label {y} is not a non-negative integer",
                path.display(),
                line + 1
            )));
        }
        labels.push(y as usize);
    }
    let classes = labels.iter().copied().max().map_or(1, |m| m + 1);
    Dataset::new(features, cols.len(), labels, classes)
}
