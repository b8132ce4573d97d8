//! CSV ingestion and emission for datasets.
//!
//! Input files carry a header row, numeric feature columns, and one
//! label column (by default the last). Errors name the offending record
//! and column, since silently coerced cells are how bad analyses start.

use std::fmt;
use std::path::Path;

use losstest_core::data::{Dataset, LabelKind};

/// How the label column encodes classification labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelCoding {
    /// Labels are already −1 / +1.
    Pm1,
    /// Labels are 0 / 1 and get remapped to −1 / +1.
    ZeroOne,
}

/// Which column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Defaults to the last column when absent.
    pub label_column: Option<LabelColumn>,
    pub label_coding: LabelCoding,
    pub task: LabelKind,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {source}")]
    Malformed {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}, record {record}, column '{column}': {message}")]
    Cell { path: String, record: usize, column: String, message: String },
    #[error("{0}")]
    Options(String),
}

fn parse_finite(raw: &str) -> Result<f64, String> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| format!("'{raw}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{raw}' is not a finite number"));
    }
    Ok(v)
}

struct ColumnNames(Vec<String>);

impl fmt::Display for ColumnNames {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(", "))
    }
}

/// Reads a CSV file into a validated dataset; row order is preserved.
pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<Dataset, CsvError> {
    if opts.task == LabelKind::Regression && opts.label_coding == LabelCoding::ZeroOne {
        return Err(CsvError::Options(
            "label coding zero-one only applies to classification labels".into(),
        ));
    }
    let shown = path.display().to_string();
    let io_err = |source| CsvError::Io { path: shown.clone(), source };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| CsvError::Malformed { path: shown.clone(), source })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.len() < 2 {
        return Err(CsvError::Schema {
            path: shown,
            message: format!("need at least one feature column and one label column, found {}", headers.len()),
        });
    }

    let label_idx = match &opts.label_column {
        None => headers.len() - 1,
        Some(LabelColumn::Index(i)) => {
            if *i >= headers.len() {
                return Err(CsvError::Schema {
                    path: shown,
                    message: format!("label column index {i} out of range; file has {} columns", headers.len()),
                });
            }
            *i
        }
        Some(LabelColumn::Name(name)) => match headers.iter().position(|h| h == name) {
            Some(i) => i,
            None => {
                return Err(CsvError::Schema {
                    path: shown,
                    message: format!("no column named '{name}'; columns are: {}", ColumnNames(headers)),
                });
            }
        },
    };

    let d = headers.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| CsvError::Malformed { path: shown.clone(), source })?;
        let record_no = idx + 1;
        if record.len() != headers.len() {
            return Err(CsvError::Schema {
                path: shown,
                message: format!(
                    "record {record_no} has {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        for (col, raw) in record.iter().enumerate() {
            let value = parse_finite(raw).map_err(|message| CsvError::Cell {
                path: shown.clone(),
                record: record_no,
                column: headers[col].clone(),
                message,
            })?;
            if col == label_idx {
                labels.push(decode_label(value, opts).map_err(|message| CsvError::Cell {
                    path: shown.clone(),
                    record: record_no,
                    column: headers[col].clone(),
                    message,
                })?);
            } else {
                features.push(value);
            }
        }
    }

    Dataset::new(features, d, labels, opts.task)
        .map_err(|e| CsvError::Schema { path: shown, message: e.to_string() })
}

fn decode_label(value: f64, opts: &IngestOptions) -> Result<f64, String> {
    match (opts.task, opts.label_coding) {
        (LabelKind::Regression, _) => Ok(value),
        (LabelKind::Classification, LabelCoding::Pm1) => {
            if value == 1.0 || value == -1.0 {
                Ok(value)
            } else {
                Err(format!("classification label must be -1 or 1, got {value}"))
            }
        }
        (LabelKind::Classification, LabelCoding::ZeroOne) => match value {
            v if v == 0.0 => Ok(-1.0),
            v if v == 1.0 => Ok(1.0),
            v => Err(format!("classification label must be 0 or 1 under zero-one coding, got {v}")),
        },
    }
}

/// Writes a dataset back out with generated feature names x0..x{d−1} and
/// label column 'y'. Values print in shortest round-trip form, so
/// ingest → emit → ingest is lossless.
pub fn emit_csv(data: &Dataset, out: &mut impl std::io::Write) -> std::io::Result<()> {
    let mut header: Vec<String> = (0..data.d()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.n() {
        let mut cells: Vec<String> = data.row(i).iter().map(|v| format!("{v}")).collect();
        cells.push(format!("{}", data.labels()[i]));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
