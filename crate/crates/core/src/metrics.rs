//! Confusion-matrix accounting with attack (label 1) as the positive class.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn errors(&self) -> u64 {
        self.fp + self.fn_
    }
}

pub fn confusion(predicted: &[u8], actual: &[u8]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::Precondition(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Empty("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p != 0, a != 0) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// A ratio whose denominator may be zero. Undefined ratios carry value 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub defined: bool,
}

impl Ratio {
    fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            Ratio {
                value: 0.0,
                defined: false,
            }
        } else {
            Ratio {
                value: num as f64 / den as f64,
                defined: true,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: Ratio,
    pub recall: Ratio,
    /// False alarm rate, FP / (FP + TN).
    pub far: Ratio,
}

pub fn report(cm: &ConfusionMatrix) -> MetricsReport {
    let total = cm.total();
    assert!(total > 0, "report of an empty confusion matrix");
    MetricsReport {
        accuracy: (cm.tp + cm.tn) as f64 / total as f64,
        precision: Ratio::of(cm.tp, cm.tp + cm.fp),
        recall: Ratio::of(cm.tp, cm.tp + cm.fn_),
        far: Ratio::of(cm.fp, cm.fp + cm.tn),
    }
}

impl MetricsReport {
    pub const CSV_HEADER: [&'static str; 4] = ["Acc(%)", "Precision", "Recall", "FAR"];

    /// Cells in table order: accuracy in percent, then precision, recall and FAR.
    pub fn csv_cells(&self) -> [String; 4] {
        [
            format!("{:.2}", self.accuracy * 100.0),
            format!("{:.4}", self.precision.value),
            format!("{:.4}", self.recall.value),
            format!("{:.4}", self.far.value),
        ]
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn round4(x: f64) -> f64 {
        (x * 1e4).round() / 1e4
    }

    #[test]
    fn confusion_counts() {
        let cm = confusion(&[1, 0], &[1, 1]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, tn: 0, fp: 0, fn_: 1 });
        let cm = confusion(&[0, 1], &[0, 1]).unwrap();
        assert_eq!((cm.tp, cm.tn), (1, 1));
        assert!(matches!(confusion(&[], &[]), Err(Error::Empty(_))));
        assert!(confusion(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn reference_report() {
        let r = report(&ConfusionMatrix { tp: 50, tn: 40, fp: 5, fn_: 5 });
        assert_eq!(round4(r.accuracy), 0.9);
        assert_eq!(round4(r.precision.value), 0.9091);
        assert_eq!(round4(r.recall.value), 0.9091);
        assert_eq!(round4(r.far.value), 0.1111);
        assert_eq!(r.csv_cells(), ["90.00", "0.9091", "0.9091", "0.1111"]);
    }

    #[test]
    fn degenerate_report_flags_undefined() {
        let r = report(&ConfusionMatrix { tp: 0, tn: 10, fp: 0, fn_: 0 });
        assert_eq!(r.accuracy, 1.0);
        assert!(!r.precision.defined && r.precision.value == 0.0);
        assert!(!r.recall.defined && r.recall.value == 0.0);
        assert!(r.far.defined && r.far.value == 0.0);
    }

    #[test]
    fn perfect_classifier() {
        let cm = confusion(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        let r = report(&cm);
        assert_eq!((r.accuracy, r.far.value), (1.0, 0.0));
    }

    fn labels(n: usize) -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
        (
            prop::collection::vec(0u8..2, n),
            prop::collection::vec(0u8..2, n),
        )
    }

    proptest! {
        #[test]
        fn accuracy_identities((p, a) in (1usize..60).prop_flat_map(labels)) {
            let cm = confusion(&p, &a).unwrap();
            prop_assert_eq!(cm.total() as usize, p.len());
            let r = report(&cm);
            let expected = 1.0 - cm.errors() as f64 / cm.total() as f64;
            prop_assert!((r.accuracy - expected).abs() < 1e-15);

            let swapped = confusion(&a, &p).unwrap();
            prop_assert_eq!((swapped.fp, swapped.fn_), (cm.fn_, cm.fp));
            prop_assert_eq!(report(&swapped).accuracy, r.accuracy);

            if cm.tn + cm.fp > 0 {
                let specificity = cm.tn as f64 / (cm.tn + cm.fp) as f64;
                prop_assert!((r.far.value + specificity - 1.0).abs() < 1e-12);
            }
            for v in [r.accuracy, r.precision.value, r.recall.value, r.far.value] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
