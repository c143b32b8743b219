use serde::{Deserialize, Serialize};

use super::Dataset;

/// Per-column (min, max) learned on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub ranges: Vec<(f64, f64)>,
}

/// Column extrema of `train`. Cells that are still `NaN` (unencoded
/// categoricals) are ignored.
pub fn fit_minmax(train: &Dataset) -> ScalingParams {
    let ranges = train
        .features()
        .columns()
        .into_iter()
        .map(|col| {
            let (lo, hi) = col
                .iter()
                .filter(|v| !v.is_nan())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if lo > hi {
                (0.0, 0.0)
            } else {
                (lo, hi)
            }
        })
        .collect();
    ScalingParams { ranges }
}

/// `x' = (x - min) / (max - min)`, clipped to `[0, 1]`. Constant columns map to 0.
pub fn apply_minmax(mut data: Dataset, params: &ScalingParams) -> Dataset {
    assert_eq!(
        data.n_cols(),
        params.ranges.len(),
        "scaling params fitted on a different schema"
    );
    for (mut col, &(lo, hi)) in data
        .features_mut()
        .columns_mut()
        .into_iter()
        .zip(&params.ranges)
    {
        let span = hi - lo;
        col.mapv_inplace(|v| {
            if v.is_nan() {
                v
            } else if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        });
    }
    data
}
