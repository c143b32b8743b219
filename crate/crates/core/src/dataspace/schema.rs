use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Timestamp,
    Label,
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            "timestamp" => Ok(ColumnKind::Timestamp),
            "label" => Ok(ColumnKind::Label),
            other => Err(Error::Schema(format!("unknown column kind `{other}`"))),
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Timestamp => "timestamp",
            ColumnKind::Label => "label",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Column is read for validation but absent from the output (payload columns).
    #[serde(default)]
    pub drop: bool,
}

/// Input description of a CSV file: ordered columns plus the label value that
/// marks an attack.
///
/// Text form, one column per line, `#` starts a comment:
///
/// ```text
/// label_positive = Attack
/// appName, categorical
/// totalSourceBytes, numeric
/// sourcePayloadAsBase64, numeric, drop
/// startDateTime, timestamp
/// stopDateTime, timestamp
/// Tag, label
/// ```
///
/// When two timestamp columns are kept, the first is the start and the second the
/// end of the flow; they are replaced by a single `duration` column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub label_positive: String,
}

pub const DURATION_COLUMN: &str = "duration";

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, label_positive: impl Into<String>) -> Result<Self> {
        let schema = Schema {
            columns,
            label_positive: label_positive.into(),
        };
        schema.validate()?;
        Ok(schema)
    }

    /// All-numeric schema `f01..fNN` plus a `label` column, matching the CSV
    /// written for synthetic benchmarks.
    pub fn numeric(n_features: usize) -> Self {
        let mut columns: Vec<ColumnSpec> = (0..n_features)
            .map(|i| ColumnSpec {
                name: feature_name(i),
                kind: ColumnKind::Numeric,
                drop: false,
            })
            .collect();
        columns.push(ColumnSpec {
            name: "label".into(),
            kind: ColumnKind::Label,
            drop: false,
        });
        Schema {
            columns,
            label_positive: "attack".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Label)
            .count();
        if labels != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one label column, found {labels}"
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if c.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        let stamps = self.kept_timestamps().len();
        if stamps != 0 && stamps != 2 {
            return Err(Error::Schema(format!(
                "timestamp columns come as a (start, end) pair, found {stamps}"
            )));
        }
        if self.label_positive.is_empty() {
            return Err(Error::Schema("label_positive is empty".into()));
        }
        Ok(())
    }

    pub fn label_column(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::Label)
            .expect("validated schema has a label column")
    }

    pub(crate) fn kept_timestamps(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColumnKind::Timestamp && !c.drop)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut label_positive = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                if key.trim() != "label_positive" {
                    return Err(Error::Schema(format!(
                        "line {}: unknown directive `{}`",
                        lineno + 1,
                        key.trim()
                    )));
                }
                label_positive = Some(value.trim().to_string());
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::Schema(format!(
                    "line {}: expected `name, kind[, drop]`",
                    lineno + 1
                )));
            }
            let drop = match fields.get(2) {
                None => false,
                Some(&"drop") => true,
                Some(&"keep") => false,
                Some(other) => {
                    return Err(Error::Schema(format!(
                        "line {}: unknown flag `{other}`",
                        lineno + 1
                    )))
                }
            };
            columns.push(ColumnSpec {
                name: fields[0].to_string(),
                kind: fields[1].parse()?,
                drop,
            });
        }
        let label_positive = label_positive
            .ok_or_else(|| Error::Schema("missing `label_positive = <value>` line".into()))?;
        Schema::new(columns, label_positive)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("label_positive = {}\n", self.label_positive);
        for c in &self.columns {
            out.push_str(&format!("{}, {}", c.name, c.kind));
            if c.drop {
                out.push_str(", drop");
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn feature_name(i: usize) -> String {
    format!("f{:02}", i + 1)
}

/// Kind of a column in a loaded [`Dataset`](super::Dataset).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: FeatureKind,
}
