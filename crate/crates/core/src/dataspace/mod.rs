//! Flow-record ingestion and preprocessing: CSV loading with duration
//! derivation, categorical mapping, min-max scaling, stratified splits, and a
//! seeded synthetic benchmark.

mod categorical;
mod dataset;
mod load;
mod scaling;
mod schema;
mod split;
mod synth;

pub use categorical::{encode_categoricals, CategoricalMap};
pub use dataset::Dataset;
pub use load::{load_csv, read_csv, write_csv};
pub use scaling::{apply_minmax, fit_minmax, ScalingParams};
pub use schema::{ColumnKind, ColumnSpec, FeatureColumn, FeatureKind, Schema, DURATION_COLUMN};
pub use split::{stratified_folds, stratified_split};
pub use synth::synthesize_benchmark;

/// Encoder and scaler fitted on a training split, applied to any later split.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Preprocessor {
    pub categorical: CategoricalMap,
    pub scaling: ScalingParams,
}

impl Preprocessor {
    /// Fits the categorical map, encodes, then fits min-max on the encoded
    /// training split. Returns the fitted preprocessor and the transformed split.
    pub fn fit(train: Dataset) -> crate::Result<(Self, Dataset)> {
        let categorical = CategoricalMap::fit(&train);
        let encoded = encode_categoricals(train, &categorical);
        let scaling = fit_minmax(&encoded);
        let out = apply_minmax(encoded, &scaling);
        out.check_finite()?;
        Ok((
            Preprocessor {
                categorical,
                scaling,
            },
            out,
        ))
    }

    pub fn transform(&self, data: Dataset) -> crate::Result<Dataset> {
        let out = apply_minmax(encode_categoricals(data, &self.categorical), &self.scaling);
        out.check_finite()?;
        Ok(out)
    }
}
