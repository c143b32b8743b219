use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use ndarray::Array2;

use super::dataset::{Dataset, PendingColumn};
use super::schema::{ColumnKind, FeatureColumn, FeatureKind, Schema, DURATION_COLUMN};
use crate::{Error, Result};

/// Reads a CSV file of flow records described by `schema`.
///
/// Columns are looked up by header name, so extra CSV columns are ignored and the
/// output follows schema order. Dropped columns are skipped, a kept (start, end)
/// timestamp pair becomes one `duration` column in seconds, and the label column
/// maps `label_positive` to 1 and everything else to 0.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Empty("CSV file has no header".into()));
    }

    let mut source = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let idx = headers
            .iter()
            .position(|h| h == col.name)
            .ok_or_else(|| Error::Schema(format!("missing column `{}`", col.name)))?;
        source.push(idx);
    }

    let stamps = schema.kept_timestamps();
    let mut outputs: Vec<Output> = Vec::new();
    let mut columns = Vec::new();
    for (i, col) in schema.columns.iter().enumerate() {
        if col.drop {
            continue;
        }
        match col.kind {
            ColumnKind::Numeric => {
                outputs.push(Output::Numeric(source[i]));
                columns.push(FeatureColumn {
                    name: col.name.clone(),
                    kind: FeatureKind::Numeric,
                });
            }
            ColumnKind::Categorical => {
                outputs.push(Output::Categorical(source[i]));
                columns.push(FeatureColumn {
                    name: col.name.clone(),
                    kind: FeatureKind::Categorical,
                });
            }
            ColumnKind::Timestamp if stamps.first() == Some(&i) => {
                outputs.push(Output::Duration(source[stamps[0]], source[stamps[1]]));
                columns.push(FeatureColumn {
                    name: DURATION_COLUMN.into(),
                    kind: FeatureKind::Numeric,
                });
            }
            ColumnKind::Timestamp | ColumnKind::Label => {}
        }
    }
    let label_src = source[schema
        .columns
        .iter()
        .position(|c| c.kind == ColumnKind::Label)
        .expect("validated")];

    let n_cols = outputs.len();
    let mut cells = Vec::new();
    let mut labels = Vec::new();
    let mut text: Vec<Vec<String>> = vec![Vec::new(); n_cols];
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        for (c, out) in outputs.iter().enumerate() {
            let value = match *out {
                Output::Numeric(idx) => parse_number(cell(idx), row, &columns[c].name)?,
                Output::Categorical(idx) => {
                    text[c].push(cell(idx).to_string());
                    f64::NAN
                }
                Output::Duration(start, end) => {
                    let s = parse_timestamp(cell(start), row)?;
                    let e = parse_timestamp(cell(end), row)?;
                    e - s
                }
            };
            cells.push(value);
        }
        labels.push(u8::from(cell(label_src) == schema.label_positive));
    }
    if labels.is_empty() {
        return Err(Error::Empty("CSV file has no data rows".into()));
    }
    let features = Array2::from_shape_vec((labels.len(), n_cols), cells)
        .expect("row-major buffer matches shape");
    let pending = text
        .into_iter()
        .enumerate()
        .filter(|(c, _)| matches!(outputs[*c], Output::Categorical(_)))
        .map(|(column, values)| PendingColumn { column, values })
        .collect();
    Dataset::with_pending(features, labels, columns, pending)
}

enum Output {
    Numeric(usize),
    Categorical(usize),
    Duration(usize, usize),
}

fn parse_number(s: &str, row: usize, column: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Row {
            row,
            message: format!("column `{column}`: cannot parse `{s}` as a finite number"),
        }),
    }
}

/// Seconds since the epoch, or a plain number of seconds.
fn parse_timestamp(s: &str, row: usize) -> Result<f64> {
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp_millis() as f64 / 1000.0);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp_millis() as f64 / 1000.0);
        }
    }
    Err(Error::Row {
        row,
        message: format!("cannot parse timestamp `{s}`"),
    })
}

/// Writes a fully numeric dataset as CSV: one column per feature, then a
/// `label` column holding `attack` or `normal`. Readable with
/// [`Schema::numeric`].
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    if data.has_pending_categoricals() {
        return Err(Error::Precondition("encode categorical columns before writing".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = data.columns().iter().map(|c| c.name.as_str()).collect();
    header.push("label");
    w.write_record(&header)?;
    for (row, &label) in data.features().rows().into_iter().zip(data.labels()) {
        let mut cells: Vec<String> = row.iter().map(f64::to_string).collect();
        cells.push(if label == 1 { "attack" } else { "normal" }.to_string());
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
