use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, TreeParams};
use super::{check_points, check_training};
use crate::dataspace::Dataset;
use crate::rng::child_rng;
use crate::{Error, Result};

const ERROR_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleMethod {
    Bagging,
    AdaBoost,
}

impl EnsembleMethod {
    pub const ALL: [EnsembleMethod; 2] = [EnsembleMethod::Bagging, EnsembleMethod::AdaBoost];
}

impl fmt::Display for EnsembleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for EnsembleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnsembleMethod::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParam {
                name: "method".into(),
                message: format!("unknown ensemble method `{s}`"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub method: EnsembleMethod,
    pub n_trees: usize,
    /// Upper bound on internal nodes per tree.
    pub max_splits: usize,
    /// Variables drawn per split (bagging only); defaults to `ceil(sqrt(M))`.
    pub m_try: Option<usize>,
    /// Draw bootstrap samples (bagging only). Off means every tree sees the
    /// training set as is.
    pub bootstrap: bool,
}

impl EnsembleConfig {
    pub fn new(method: EnsembleMethod, n_trees: usize, max_splits: usize) -> Self {
        EnsembleConfig {
            method,
            n_trees,
            max_splits,
            m_try: None,
            bootstrap: true,
        }
    }

    fn resolved_m_try(&self, n_features: usize) -> Result<usize> {
        let m = self
            .m_try
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize);
        if m == 0 || m > n_features {
            return Err(Error::Precondition(format!(
                "m_try = {m} must lie in [1, {n_features}]"
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub method: EnsembleMethod,
    pub trees: Vec<DecisionTree>,
    /// All 1 for bagging, stage weights for AdaBoost.
    pub tree_weights: Vec<f64>,
    pub n_features: usize,
}

/// `1/2 ln((1 - err) / err)` with `err` clamped to `[1e-10, 1 - 1e-10]`.
pub fn adaboost_stage_weight(err: f64) -> f64 {
    let e = err.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);
    0.5 * ((1.0 - e) / e).ln()
}

pub fn ensemble_train(train: &Dataset, config: &EnsembleConfig, seed: u64) -> Result<EnsembleModel> {
    check_training(train)?;
    if config.n_trees == 0 || config.max_splits == 0 {
        return Err(Error::Precondition(
            "ensemble needs n_trees >= 1 and max_splits >= 1".into(),
        ));
    }
    match config.method {
        EnsembleMethod::Bagging => bagging(train, config, seed),
        EnsembleMethod::AdaBoost => adaboost(train, config),
    }
}

fn bagging(train: &Dataset, config: &EnsembleConfig, seed: u64) -> Result<EnsembleModel> {
    let x = train.features().view();
    let n = train.n_rows();
    let m_try = config.resolved_m_try(train.n_cols())?;
    let params = TreeParams {
        max_splits: config.max_splits,
        m_try: Some(m_try),
    };
    let trees: Vec<DecisionTree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = child_rng(seed, t as u64);
            let mut weights = vec![0.0; n];
            if config.bootstrap {
                use rand::Rng;
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weights.fill(1.0);
            }
            grow(x, train.labels(), &weights, params, &mut rng)
        })
        .collect();
    Ok(EnsembleModel {
        method: EnsembleMethod::Bagging,
        tree_weights: vec![1.0; trees.len()],
        trees,
        n_features: train.n_cols(),
    })
}

/// AdaBoost.M1 on binary labels. Once a stage fits its weighted sample without
/// error the sample weights stop changing, so the remaining stages repeat it.
fn adaboost(train: &Dataset, config: &EnsembleConfig) -> Result<EnsembleModel> {
    let x = train.features().view();
    let labels = train.labels();
    let n = train.n_rows();
    let params = TreeParams {
        max_splits: config.max_splits,
        m_try: None,
    };
    // growth with m_try = None consumes no randomness
    let mut unused = child_rng(0, 0);
    let mut weights = vec![1.0 / n as f64; n];
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut stage_weights = Vec::with_capacity(config.n_trees);
    while trees.len() < config.n_trees {
        let tree = grow(x, labels, &weights, params, &mut unused);
        let miss: Vec<bool> = x
            .axis_iter(Axis(0))
            .zip(labels)
            .map(|(row, &y)| tree.predict_row(row) != y)
            .collect();
        let total: f64 = weights.iter().sum();
        let err: f64 = weights
            .iter()
            .zip(&miss)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum::<f64>()
            / total;
        let alpha = adaboost_stage_weight(err);
        if !miss.iter().any(|&m| m) {
            while trees.len() < config.n_trees {
                trees.push(tree.clone());
                stage_weights.push(alpha);
            }
            break;
        }
        for (w, &m) in weights.iter_mut().zip(&miss) {
            *w *= if m { alpha.exp() } else { (-alpha).exp() };
        }
        let norm: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= norm);
        trees.push(tree);
        stage_weights.push(alpha);
    }
    Ok(EnsembleModel {
        method: EnsembleMethod::AdaBoost,
        trees,
        tree_weights: stage_weights,
        n_features: train.n_cols(),
    })
}

/// Bagging: unweighted majority, tie to class 0. AdaBoost: sign of
/// `sum w_t (2 h_t(x) - 1)`, zero to class 0.
pub fn ensemble_predict(model: &EnsembleModel, points: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
    check_points(model.n_features, points)?;
    Ok(points
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| {
            let score: f64 = model
                .trees
                .iter()
                .zip(&model.tree_weights)
                .map(|(t, w)| w * (2.0 * f64::from(t.predict_row(row)) - 1.0))
                .sum();
            u8::from(score > 0.0)
        })
        .collect())
}
