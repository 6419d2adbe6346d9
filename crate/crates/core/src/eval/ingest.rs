//! CSV ingestion. Rows are samples, columns are features; the first row is a
//! header.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Column holding class or fault labels, if any.
    pub label_column: Option<String>,
    /// Columns to ignore, such as identifiers.
    #[serde(default)]
    pub drop_columns: Vec<String>,
}

impl CsvSchema {
    pub fn labeled(column: impl Into<String>) -> Self {
        Self {
            label_column: Some(column.into()),
            drop_columns: Vec::new(),
        }
    }

    pub fn dropping(mut self, column: impl Into<String>) -> Self {
        self.drop_columns.push(column.into());
        self
    }
}

/// Reads `path` into a dataset whose `train` holds every row (as a column of
/// the `D x N` matrix).
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<LabeledDataset> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let label_index = match &schema.label_column {
        Some(name) => Some(header.iter().position(|h| h == name).ok_or_else(|| {
            Error::MissingLabelColumn {
                path: path.to_path_buf(),
                column: name.clone(),
            }
        })?),
        None => None,
    };
    let feature_indices: Vec<usize> = (0..header.len())
        .filter(|&i| Some(i) != label_index && !schema.drop_columns.contains(&header[i]))
        .collect();
    if feature_indices.is_empty() {
        return Err(Error::Dimension(format!("{}: no feature columns", path.display())));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for &i in &feature_indices {
            let cell = &record[i];
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    path: path.to_path_buf(),
                    line,
                    column: header[i].clone(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                line,
                column: header[i].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    path: path.to_path_buf(),
                    line,
                    column: header[i].clone(),
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        if let Some(li) = label_index {
            if record[li].is_empty() {
                return Err(Error::MissingValue {
                    path: path.to_path_buf(),
                    line,
                    column: header[li].clone(),
                });
            }
            labels.push(record[li].to_string());
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty {
            rows: feature_indices.len(),
            cols: 0,
        });
    }
    let d = feature_indices.len();
    // values are row-major per sample, i.e. column-major for D x N
    let train = DataMatrix::new(DMatrix::from_vec(d, rows, values))?;
    Ok(LabeledDataset {
        train,
        train_labels: label_index.map(|_| labels),
        test: None,
        test_labels: None,
        fault_onset: None,
        feature_names: feature_indices.iter().map(|&i| header[i].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toy_file() {
        let f = write("a,b,c\n1,2,3\n4,5,6\n");
        let data = load_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.train.features(), 3);
        assert_eq!(data.train.samples(), 2);
        assert_eq!(data.train.as_matrix()[(2, 1)], 6.0);
        assert_eq!(data.feature_names, vec!["a", "b", "c"]);
        assert!(data.train_labels.is_none());
    }

    #[test]
    fn labels_and_dropped_columns() {
        let f = write("id,diagnosis,x,y\n7,M,1.5,2\n8,B,-1,0.25\n");
        let schema = CsvSchema::labeled("diagnosis").dropping("id");
        let data = load_csv(f.path(), &schema).unwrap();
        assert_eq!(data.train.features(), 2);
        assert_eq!(data.train_labels.unwrap(), vec!["M", "B"]);
        assert_eq!(data.feature_names, vec!["x", "y"]);
    }

    #[test]
    fn missing_cell_reports_line() {
        let f = write("a,b\n1,2\n3,\n");
        match load_csv(f.path(), &CsvSchema::default()) {
            Err(Error::MissingValue { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinct_errors() {
        let f = write("a,b\n1,2\n3\n");
        assert!(matches!(
            load_csv(f.path(), &CsvSchema::default()),
            Err(Error::MalformedRow { line: 3, expected: 2, found: 1, .. })
        ));
        let f = write("a,b\n1,x\n");
        assert!(matches!(
            load_csv(f.path(), &CsvSchema::default()),
            Err(Error::NonNumeric { line: 2, .. })
        ));
        let f = write("a,b\n1,2\n");
        assert!(matches!(
            load_csv(f.path(), &CsvSchema::labeled("label")),
            Err(Error::MissingLabelColumn { .. })
        ));
        assert!(matches!(
            load_csv(Path::new("/definitely/not/here.csv"), &CsvSchema::default()),
            Err(Error::Io { .. })
        ));
    }
}
