//! From-scratch binary classifiers: Gaussian-kernel SVM, k-NN and tree
//! ensembles.

mod ensemble;
mod knn;
mod svm;
pub mod tree;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use ensemble::{
    adaboost_stage_weight, ensemble_predict, ensemble_train, EnsembleConfig, EnsembleMethod,
    EnsembleModel,
};
pub use knn::{knn_fit, knn_predict, Distance, KnnConfig, KnnModel};
pub use svm::{svm_predict, svm_train, SvmConfig, SvmModel, SvmPrediction};

use crate::dataspace::Dataset;
use crate::{Error, Result};

/// Finite features and both classes present.
pub(crate) fn check_training(train: &Dataset) -> Result<()> {
    train.check_finite()?;
    let [zeros, ones] = train.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub(crate) fn check_points(expected: usize, points: ArrayView2<'_, f64>) -> Result<()> {
    if points.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: points.ncols(),
        });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query points".into()));
    }
    Ok(())
}

/// Hyperparameters for any classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Svm(SvmConfig),
    Knn(KnnConfig),
    Ensemble(EnsembleConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TrainedClassifier {
    Svm(SvmModel),
    Knn(KnnModel),
    Ensemble(EnsembleModel),
}

impl ClassifierConfig {
    pub fn train(&self, data: &Dataset, seed: u64) -> Result<TrainedClassifier> {
        Ok(match self {
            ClassifierConfig::Svm(c) => TrainedClassifier::Svm(svm_train(data, c)?),
            ClassifierConfig::Knn(c) => TrainedClassifier::Knn(knn_fit(data, c)?),
            ClassifierConfig::Ensemble(c) => {
                TrainedClassifier::Ensemble(ensemble_train(data, c, seed)?)
            }
        })
    }
}

impl TrainedClassifier {
    pub fn predict(&self, points: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        match self {
            TrainedClassifier::Svm(m) => Ok(svm_predict(m, points)?.labels),
            TrainedClassifier::Knn(m) => knn_predict(m, points),
            TrainedClassifier::Ensemble(m) => ensemble_predict(m, points),
        }
    }
}
