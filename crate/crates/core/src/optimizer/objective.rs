use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::{Assignment, ParamSpec, ParamValue, SearchSpace};
use crate::classifiers::{ClassifierConfig, Distance, EnsembleConfig, EnsembleMethod, KnnConfig, SvmConfig};
use crate::dataspace::{stratified_folds, Dataset};
use crate::rng::child_seed;
use crate::{Error, Result};

pub const BOX_CONSTRAINT: &str = "box_constraint";
pub const KERNEL_SCALE: &str = "kernel_scale";
pub const NUM_NEIGHBORS: &str = "num_neighbors";
pub const DISTANCE: &str = "distance";
pub const METHOD: &str = "method";
pub const MAX_NUM_SPLITS: &str = "max_num_splits";

/// Trees per ensemble, fixed while the split budget and method are tuned.
pub const ENSEMBLE_TREES: usize = 100;
/// Covariance ridge for Mahalanobis k-NN, keeping constant columns usable.
pub const MAHALANOBIS_RIDGE: f64 = 1e-6;

/// Anything the optimizer can minimize.
pub trait Objective: Sync {
    fn evaluate(&self, params: &Assignment) -> Result<f64>;
}

/// Adapts a plain function into an [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F: Fn(&Assignment) -> f64 + Sync> Objective for FnObjective<F> {
    fn evaluate(&self, params: &Assignment) -> Result<f64> {
        Ok((self.0)(params))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierFamily {
    Svm,
    Knn,
    Ensemble,
}

impl ClassifierFamily {
    pub const ALL: [ClassifierFamily; 3] = [ClassifierFamily::Svm, ClassifierFamily::Knn, ClassifierFamily::Ensemble];

    /// Untuned reference configuration.
    pub fn baseline(self, n_train: usize) -> ClassifierConfig {
        match self {
            ClassifierFamily::Svm => ClassifierConfig::Svm(SvmConfig::new(1.0, 1.0)),
            ClassifierFamily::Knn => ClassifierConfig::Knn(KnnConfig {
                covariance_ridge: MAHALANOBIS_RIDGE,
                ..KnnConfig::new(5, Distance::Euclidean)
            }),
            ClassifierFamily::Ensemble => ClassifierConfig::Ensemble(EnsembleConfig::new(
                EnsembleMethod::Bagging,
                ENSEMBLE_TREES,
                n_train.saturating_sub(1).max(1),
            )),
        }
    }

    pub fn default_space(self, n_train: usize) -> SearchSpace {
        let params = match self {
            ClassifierFamily::Svm => vec![
                ParamSpec::continuous(BOX_CONSTRAINT, 1e-3, 1e3, true),
                ParamSpec::continuous(KERNEL_SCALE, 1e-3, 1e3, true),
            ],
            ClassifierFamily::Knn => vec![
                ParamSpec::integer(NUM_NEIGHBORS, 1, 50),
                ParamSpec::categorical(DISTANCE, &Distance::ALL),
            ],
            ClassifierFamily::Ensemble => vec![
                ParamSpec::categorical(METHOD, &EnsembleMethod::ALL),
                ParamSpec::integer(MAX_NUM_SPLITS, 1, (2 * n_train).max(2) as i64),
            ],
        };
        SearchSpace::new(params).expect("default spaces are valid")
    }

    /// Baseline configuration with the assigned parameters substituted.
    pub fn config_for(self, params: &Assignment, n_train: usize) -> Result<ClassifierConfig> {
        let mut config = self.baseline(n_train);
        for (name, value) in params.iter() {
            let bad = |message: &str| Error::InvalidParam {
                name: name.to_string(),
                message: format!("{message}, got `{value}`"),
            };
            let positive_real = || value.as_f64().filter(|v| v.is_finite() && *v > 0.0).ok_or_else(|| bad("expected a positive number"));
            let count = || match value {
                ParamValue::Int(v) if *v >= 1 => Ok(*v as usize),
                _ => Err(bad("expected a positive integer")),
            };
            let level = || match value {
                ParamValue::Level(s) => Ok(s.as_str()),
                _ => Err(bad("expected a level name")),
            };
            match (&mut config, name) {
                (ClassifierConfig::Svm(c), BOX_CONSTRAINT) => c.box_constraint = positive_real()?,
                (ClassifierConfig::Svm(c), KERNEL_SCALE) => c.kernel_scale = positive_real()?,
                (ClassifierConfig::Knn(c), NUM_NEIGHBORS) => c.k = count()?,
                (ClassifierConfig::Knn(c), DISTANCE) => c.distance = level()?.parse()?,
                (ClassifierConfig::Ensemble(c), METHOD) => c.method = level()?.parse()?,
                (ClassifierConfig::Ensemble(c), MAX_NUM_SPLITS) => c.max_splits = count()?,
                _ => return Err(Error::UnknownParam(format!("{name} (for {self})"))),
            }
        }
        Ok(config)
    }
}

impl fmt::Display for ClassifierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierFamily::Svm => "svm",
            ClassifierFamily::Knn => "knn",
            ClassifierFamily::Ensemble => "ensemble",
        })
    }
}

impl FromStr for ClassifierFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierFamily::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown classifier family `{s}`")))
    }
}

/// Cross-validated misclassification rate of one classifier family on a fixed
/// training set. Fold membership is drawn once from `seed` and shared by every
/// evaluation.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    family: ClassifierFamily,
    dataset: Dataset,
    folds: usize,
    seed: u64,
    fold_of: Vec<usize>,
}

impl ObjectiveSpec {
    pub fn new(family: ClassifierFamily, dataset: Dataset, folds: usize, seed: u64) -> Result<Self> {
        if folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
        }
        if dataset.n_rows() < folds {
            return Err(Error::Precondition(format!(
                "{} rows cannot fill {folds} folds",
                dataset.n_rows()
            )));
        }
        let fold_of = stratified_folds(dataset.labels(), folds, child_seed(seed, 0xf01d));
        Ok(ObjectiveSpec {
            family,
            dataset,
            folds,
            seed,
            fold_of,
        })
    }

    pub fn family(&self) -> ClassifierFamily {
        self.family
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    /// Errors made on held-out fold `k`, or `None` if training failed.
    fn fold_errors(&self, config: &ClassifierConfig, k: usize) -> Result<Option<usize>> {
        let (held, kept): (Vec<usize>, Vec<usize>) = (0..self.dataset.n_rows()).partition(|&r| self.fold_of[r] == k);
        let train = self.dataset.select_rows(&kept)?;
        let test = self.dataset.select_rows(&held)?;
        let Ok(model) = config.train(&train, child_seed(self.seed, k as u64)) else {
            return Ok(None);
        };
        let predicted = model.predict(test.features().view())?;
        Ok(Some(predicted.iter().zip(test.labels()).filter(|(p, y)| p != y).count()))
    }
}

impl Objective for ObjectiveSpec {
    /// Pooled misclassification rate over all folds; 1.0 if any fold fails to
    /// train.
    fn evaluate(&self, params: &Assignment) -> Result<f64> {
        let n_train = self.dataset.n_rows() * (self.folds - 1) / self.folds;
        let config = self.family.config_for(params, n_train)?;
        let per_fold: Vec<Option<usize>> = (0..self.folds)
            .into_par_iter()
            .map(|k| self.fold_errors(&config, k))
            .collect::<Result<_>>()?;
        match per_fold.into_iter().sum::<Option<usize>>() {
            Some(errors) => Ok(errors as f64 / self.dataset.n_rows() as f64),
            None => Ok(1.0),
        }
    }
}
