use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::schema::{FeatureColumn, FeatureKind};
use crate::{Error, Result};

/// Raw text of a categorical column that has not been encoded yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct PendingColumn {
    pub column: usize,
    pub values: Vec<String>,
}

/// Feature matrix with binary labels (0 = normal, 1 = attack).
///
/// Categorical columns read from CSV hold `NaN` in `features` until
/// [`encode_categoricals`](super::encode_categoricals) replaces them with codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    columns: Vec<FeatureColumn>,
    pub(crate) pending: Vec<PendingColumn>,
}

impl Dataset {
    /// Builds a fully numeric dataset.
    pub fn new(features: Array2<f64>, labels: Vec<u8>, columns: Vec<FeatureColumn>) -> Result<Self> {
        let ds = Dataset {
            features,
            labels,
            columns,
            pending: Vec::new(),
        };
        ds.check_shape()?;
        ds.check_finite()?;
        Ok(ds)
    }

    /// Numeric dataset with generated column names.
    pub fn from_matrix(features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        let columns = (0..features.ncols())
            .map(|i| FeatureColumn {
                name: super::schema::feature_name(i),
                kind: FeatureKind::Numeric,
            })
            .collect();
        Dataset::new(features, labels, columns)
    }

    pub(crate) fn with_pending(
        features: Array2<f64>,
        labels: Vec<u8>,
        columns: Vec<FeatureColumn>,
        pending: Vec<PendingColumn>,
    ) -> Result<Self> {
        let ds = Dataset {
            features,
            labels,
            columns,
            pending,
        };
        ds.check_shape()?;
        Ok(ds)
    }

    fn check_shape(&self) -> Result<()> {
        if self.features.nrows() == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if self.features.nrows() != self.labels.len() {
            return Err(Error::Precondition(format!(
                "{} feature rows but {} labels",
                self.features.nrows(),
                self.labels.len()
            )));
        }
        if self.features.ncols() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                got: self.features.ncols(),
            });
        }
        if let Some(bad) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Precondition(format!("label {bad} is not 0/1")));
        }
        Ok(())
    }

    /// Fails if any cell is NaN or infinite (including unencoded categoricals).
    pub fn check_finite(&self) -> Result<()> {
        for ((row, col), v) in self.features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "row {}, column `{}`",
                    row + 1,
                    self.columns[col].name
                )));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub(crate) fn features_mut(&mut self) -> &mut Array2<f64> {
        &mut self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    /// Whether categorical text still awaits encoding.
    pub fn has_pending_categoricals(&self) -> bool {
        !self.pending.is_empty()
    }

    /// Raw text of a not-yet-encoded categorical column.
    pub fn categorical_text(&self, column: usize) -> Option<&[String]> {
        self.pending
            .iter()
            .find(|p| p.column == column)
            .map(|p| p.values.as_slice())
    }

    /// `[normal, attack]` row counts.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        let pending = self
            .pending
            .iter()
            .map(|p| PendingColumn {
                column: p.column,
                values: rows.iter().map(|&r| p.values[r].clone()).collect(),
            })
            .collect();
        Dataset::with_pending(features, labels, self.columns.clone(), pending)
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn rejects_bad_labels_and_nan() {
        assert!(Dataset::from_matrix(array![[0.0], [1.0]], vec![0, 2]).is_err());
        assert!(matches!(
            Dataset::from_matrix(array![[f64::NAN], [1.0]], vec![0, 1]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            Dataset::from_matrix(Array2::zeros((0, 2)), vec![]),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn select_rows_keeps_order() {
        let ds = Dataset::from_matrix(array![[0.0], [1.0], [2.0]], vec![0, 1, 0]).unwrap();
        let sub = ds.select_rows(&[2, 0]).unwrap();
        assert_eq!(sub.features()[[0, 0]], 2.0);
        assert_eq!(sub.labels(), &[0, 0]);
        assert_eq!(ds.class_counts(), [2, 1]);
    }
}
