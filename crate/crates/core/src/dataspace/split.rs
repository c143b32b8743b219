use rand::seq::SliceRandom;

use super::Dataset;
use crate::rng::child_rng;
use crate::{Error, Result};

/// Splits into (train, test) preserving class proportions.
///
/// Each class contributes `round(test_fraction * n_class)` rows to the test
/// split, clamped so both splits keep at least one row of it. Rows keep their
/// original relative order inside each split.
pub fn stratified_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Precondition(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..2u8 {
        let mut rows: Vec<usize> = (0..data.n_rows())
            .filter(|&r| data.labels()[r] == class)
            .collect();
        if rows.len() < 2 {
            return Err(Error::Precondition(format!(
                "class {class} has {} rows; stratified split needs at least 2",
                rows.len()
            )));
        }
        rows.shuffle(&mut child_rng(seed, u64::from(class)));
        let n_test = ((test_fraction * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select_rows(&train)?, data.select_rows(&test)?))
}

/// Assigns every row to one of `k` folds, dealing each shuffled class
/// round-robin so fold class counts differ by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<usize> {
    assert!(k >= 1);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..2u8 {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == class).collect();
        rows.shuffle(&mut child_rng(seed, 100 + u64::from(class)));
        for r in rows {
            fold[r] = next % k;
            next += 1;
        }
    }
    fold
}
