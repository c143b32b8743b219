use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_points;
use crate::dataspace::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distance {
    Euclidean,
    Mahalanobis,
    Cityblock,
}

impl Distance {
    pub const ALL: [Distance; 3] = [Distance::Euclidean, Distance::Mahalanobis, Distance::Cityblock];
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distance::ALL
            .into_iter()
            .find(|d| d.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParam {
                name: "distance".into(),
                message: format!("unknown distance `{s}`"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub distance: Distance,
    /// Ridge `lambda` added to the covariance diagonal before inversion.
    pub covariance_ridge: f64,
}

impl KnnConfig {
    pub fn new(k: usize, distance: Distance) -> Self {
        KnnConfig {
            k,
            distance,
            covariance_ridge: 0.0,
        }
    }
}

/// Stored training set. For Mahalanobis the rows are kept whitened by the
/// Cholesky factor of the regularised covariance, so every metric reduces to a
/// plain Euclidean or cityblock scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub distance: Distance,
    train: Array2<f64>,
    labels: Vec<u8>,
    /// `(Sigma + lambda I)^-1`, Mahalanobis only.
    pub inverse_covariance: Option<DMatrix<f64>>,
    whitening: Option<DMatrix<f64>>,
}

pub fn knn_fit(train: &Dataset, config: &KnnConfig) -> Result<KnnModel> {
    train.check_finite()?;
    let n = train.n_rows();
    if config.k == 0 || config.k > n {
        return Err(Error::Precondition(format!(
            "k = {} must lie in [1, {n}]",
            config.k
        )));
    }
    if !(config.covariance_ridge >= 0.0) {
        return Err(Error::Precondition("covariance ridge must be non-negative".into()));
    }
    let x = train.features();
    let (stored, inverse_covariance, whitening) = match config.distance {
        Distance::Mahalanobis => {
            let (inv, lower_inv) = regularised_inverse(x, config.covariance_ridge)?;
            (whiten(x.view(), &lower_inv), Some(inv), Some(lower_inv))
        }
        _ => (x.clone(), None, None),
    };
    Ok(KnnModel {
        k: config.k,
        distance: config.distance,
        train: stored,
        labels: train.labels().to_vec(),
        inverse_covariance,
        whitening,
    })
}

/// Returns `((Sigma + lambda I)^-1, L^-1)` with `L L^T = Sigma + lambda I`.
fn regularised_inverse(x: &Array2<f64>, ridge: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, d) = x.dim();
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in x.axis_iter(Axis(0)) {
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += da * (row[b] - mean[b]) / denom;
            }
        }
    }
    cov.fill_upper_triangle_with_lower_triangle();
    for a in 0..d {
        cov[(a, a)] += ridge;
    }
    let scale = (0..d).map(|a| cov[(a, a)].abs()).fold(0.0, f64::max);
    let chol = cov.cholesky().ok_or(Error::SingularCovariance)?;
    let l = chol.l();
    let min_pivot = (0..d).map(|a| l[(a, a)] * l[(a, a)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularCovariance);
    }
    let lower_inv = l
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or(Error::SingularCovariance)?;
    let inv = chol.inverse();
    Ok((inv, lower_inv))
}

fn whiten(x: ArrayView2<'_, f64>, lower_inv: &DMatrix<f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut out = Array2::zeros((n, d));
    for (mut dst, src) in out.axis_iter_mut(Axis(0)).zip(x.axis_iter(Axis(0))) {
        let v = lower_inv * DVector::from_iterator(d, src.iter().copied());
        dst.iter_mut().zip(v.iter()).for_each(|(o, &z)| *o = z);
    }
    out
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.train.ncols()
    }

    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.distance {
            Distance::Cityblock => a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum(),
            // squared distances rank identically
            Distance::Euclidean | Distance::Mahalanobis => {
                a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
            }
        }
    }

    /// Training-row indices ordered by distance to `query`, ties by lower index.
    pub fn neighbours(&self, query: &[f64], count: usize) -> Vec<usize> {
        let q: Vec<f64> = match &self.whitening {
            Some(w) => (w * DVector::from_column_slice(query)).iter().copied().collect(),
            None => query.to_vec(),
        };
        let mut scored: Vec<(f64, usize)> = self
            .train
            .axis_iter(Axis(0))
            .enumerate()
            .map(|(i, row)| (self.dist(&q, row.as_slice().expect("contiguous")), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
        };
        let count = count.min(scored.len());
        if count < scored.len() {
            scored.select_nth_unstable_by(count, cmp);
            scored.truncate(count);
        }
        scored.sort_unstable_by(cmp);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    fn classify(&self, query: &[f64]) -> u8 {
        let nearest = self.neighbours(query, self.k);
        let ones = nearest.iter().filter(|&&i| self.labels[i] == 1).count();
        match (2 * ones).cmp(&nearest.len()) {
            Ordering::Greater => 1,
            Ordering::Less => 0,
            Ordering::Equal => self.labels[nearest[0]],
        }
    }
}

/// Majority vote over the k nearest rows; an even split follows the single
/// nearest neighbour.
pub fn knn_predict(model: &KnnModel, points: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
    check_points(model.n_features(), points)?;
    Ok(points
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| model.classify(&row.to_vec()))
        .collect())
}
