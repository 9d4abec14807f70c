use std::path::Path;

use super::{Dataset, Provenance};
use crate::error::{Error, Result};

/// Loads a CSV with header `label,f0,f1,...`. The label count is inferred as
/// `max label + 1`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if headers.get(0) != Some("label") || headers.len() < 2 {
        return Err(Error::format(
            path,
            "header must be `label,f0,f1,...` with at least one feature column",
        ));
    }
    let dim = headers.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let row = line + 2;
        let label: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::format(path, format!("row {row}: bad label {:?}", &record[0])))?;
        labels.push(label);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("row {row}: bad feature {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::format(
                    path,
                    format!("row {row}: non-finite feature"),
                ));
            }
            features.push(v);
        }
    }
    let num_labels = (labels.iter().copied().max().unwrap_or(0) + 1).max(2);
    Dataset::new(features, labels, dim, num_labels, Provenance::CsvFile)
        .map_err(|e| Error::format(path, e.to_string()))
}
