//! CSV ingestion. Numeric feature columns are read as-is, non-numeric ones
//! are expanded to one binary column per category.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};

/// A column addressed by zero-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    #[serde(default = "yes")]
    pub has_header: bool,
    pub label_column: ColumnRef,
    /// Defaults to every column except the label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_columns: Option<Vec<ColumnRef>>,
    /// Label value treated as positive. Without it labels are parsed as
    /// numbers and any non-zero value is positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    /// Regression targets: positive when strictly above the column mean.
    #[serde(default)]
    pub binarize_at_mean: bool,
}

fn parse_err(line: u64, message: impl Into<String>) -> PuError {
    PuError::Parse {
        line,
        message: message.into(),
    }
}

fn from_csv_error(err: csv::Error) -> PuError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => PuError::Io(io),
        other => parse_err(line, format!("{other:?}")),
    }
}

fn resolve(col: &ColumnRef, headers: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
    let idx = match col {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => headers
            .ok_or_else(|| PuError::Config(format!("column name {name:?} used without a header row")))?
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| PuError::Config(format!("no column named {name:?}")))?,
    };
    if idx >= width {
        return Err(PuError::Config(format!("column {idx} out of range (width {width})")));
    }
    Ok(idx)
}

struct Table {
    headers: Option<csv::StringRecord>,
    rows: Vec<(u64, csv::StringRecord)>,
}

fn read_table(path: &Path, has_header: bool) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match from_csv_error(e) {
            PuError::Io(io) => PuError::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
            other => other,
        })?;
    let headers = if has_header {
        Some(reader.headers().map_err(from_csv_error)?.clone())
    } else {
        None
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(from_csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, record));
    }
    if rows.is_empty() {
        return Err(PuError::invalid(format!("{} has no data rows", path.display())));
    }
    Ok(Table { headers, rows })
}

/// Reads features and binary labels according to `schema`.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<(Array2<f64>, Vec<bool>)> {
    let table = read_table(path, schema.has_header)?;
    let width = table.rows[0].1.len();
    let label_idx = resolve(&schema.label_column, table.headers.as_ref(), width)?;
    let feature_idx: Vec<usize> = match &schema.feature_columns {
        Some(cols) => cols
            .iter()
            .map(|c| resolve(c, table.headers.as_ref(), width))
            .collect::<Result<_>>()?,
        None => (0..width).filter(|&i| i != label_idx).collect(),
    };
    if feature_idx.is_empty() {
        return Err(PuError::Config("no feature columns".into()));
    }

    // Expand each feature column into one or more output columns.
    let n = table.rows.len();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &j in &feature_idx {
        let parsed: Vec<Option<f64>> = table.rows.iter().map(|(_, r)| r[j].parse::<f64>().ok()).collect();
        if parsed.iter().all(Option::is_some) {
            columns.push(parsed.into_iter().map(|v| v.unwrap()).collect());
        } else {
            let mut categories: Vec<&str> = Vec::new();
            for (_, r) in &table.rows {
                if !categories.contains(&&r[j]) {
                    categories.push(&r[j]);
                }
            }
            for cat in categories {
                columns.push(
                    table.rows
                        .iter()
                        .map(|(_, r)| if &r[j] == cat { 1.0 } else { 0.0 })
                        .collect(),
                );
            }
        }
    }
    let d = columns.len();
    let features = Array2::from_shape_fn((n, d), |(i, k)| columns[k][i]);

    let labels = if schema.binarize_at_mean || schema.positive_label.is_none() {
        let values: Vec<f64> = table
            .rows
            .iter()
            .map(|(line, r)| {
                r[label_idx]
                    .parse::<f64>()
                    .map_err(|_| parse_err(*line, format!("label {:?} is not numeric", &r[label_idx])))
            })
            .collect::<Result<_>>()?;
        if schema.binarize_at_mean {
            let mean = values.iter().sum::<f64>() / n as f64;
            values.iter().map(|v| *v > mean).collect()
        } else {
            values.iter().map(|v| *v != 0.0).collect()
        }
    } else {
        let positive = schema.positive_label.as_deref().unwrap_or_default();
        table.rows.iter().map(|(_, r)| &r[label_idx] == positive).collect()
    };
    Ok((features, labels))
}

/// Reads an all-numeric CSV. A first row that does not parse is taken as a
/// header.
pub fn load_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let table = read_table(path, false)?;
    let mut rows = table.rows.as_slice();
    if rows[0].1.iter().any(|f| f.parse::<f64>().is_err()) {
        rows = &rows[1..];
    }
    if rows.is_empty() {
        return Err(PuError::invalid(format!("{} has no data rows", path.display())));
    }
    let d = rows[0].1.len();
    let mut data = Vec::with_capacity(rows.len() * d);
    for (line, record) in rows {
        for field in record.iter() {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|_| parse_err(*line, format!("value {field:?} is not numeric")))?,
            );
        }
    }
    Array2::from_shape_vec((rows.len(), d), data).map_err(|e| PuError::invalid(e.to_string()))
}

pub fn write_matrix_csv(path: &Path, data: &Array2<f64>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_path(path).map_err(from_csv_error)?;
    for row in data.rows() {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(from_csv_error)?;
    }
    writer.flush()?;
    Ok(())
}
