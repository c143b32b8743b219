//! Soft-margin SVM with a Gaussian kernel, trained in the dual.
//!
//! The solver is sequential minimal optimization with maximal-violating-pair plus
//! second-order working-set selection. It keeps the un-biased decision values
//! `F_k = sum_l alpha_l y_l K(x_l, x_k)` up to date after every pair update, so
//! each step costs two kernel columns.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_points, check_training};
use crate::dataspace::Dataset;
use crate::{Error, Result};

/// Full kernel matrices are cached (as `f32`) up to this many training rows.
const FULL_KERNEL_LIMIT: usize = 6000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Box constraint `C`.
    pub box_constraint: f64,
    /// Kernel scale: `K(u, v) = exp(-|u - v|^2 / (2 scale^2))`.
    pub kernel_scale: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Stop after this many consecutive sweeps (n pair updates each) without a
    /// new smallest KKT violation. Hard cap: `10 * max_passes` sweeps.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            box_constraint: 1.0,
            kernel_scale: 1.0,
            tolerance: 1e-3,
            max_passes: 10,
        }
    }
}

impl SvmConfig {
    pub fn new(box_constraint: f64, kernel_scale: f64) -> Self {
        SvmConfig {
            box_constraint,
            kernel_scale,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_constraint > 0.0 && self.box_constraint.is_finite()) {
            return Err(Error::Precondition(format!(
                "box constraint must be positive, got {}",
                self.box_constraint
            )));
        }
        if !(self.kernel_scale > 0.0 && self.kernel_scale.is_finite()) {
            return Err(Error::Precondition(format!(
                "kernel scale must be positive, got {}",
                self.kernel_scale
            )));
        }
        if !(self.tolerance > 0.0) || self.max_passes == 0 {
            return Err(Error::Precondition(
                "solver tolerance and max_passes must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Array2<f64>,
    /// `alpha_i * y_i` per support vector, with `y` in {-1, +1}.
    pub dual_coefficients: Vec<f64>,
    pub intercept: f64,
    pub kernel_scale: f64,
    pub box_constraint: f64,
    /// Largest KKT violation left when the solver stopped.
    pub kkt_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmPrediction {
    pub labels: Vec<u8>,
    pub decision_values: Vec<f64>,
}

#[inline]
fn rbf(u: &[f64], v: &[f64], inv_two_scale_sq: f64) -> f64 {
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-sq * inv_two_scale_sq).exp()
}

enum KernelCache<'a> {
    Full { n: usize, values: Vec<f32> },
    OnDemand { rows: Vec<&'a [f64]>, gamma: f64 },
}

impl<'a> KernelCache<'a> {
    fn new(rows: Vec<&'a [f64]>, gamma: f64) -> Self {
        let n = rows.len();
        if n > FULL_KERNEL_LIMIT {
            return KernelCache::OnDemand { rows, gamma };
        }
        let mut values = vec![0f32; n * n];
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out)| {
                for (j, cell) in out.iter_mut().enumerate() {
                    *cell = rbf(rows[i], rows[j], gamma) as f32;
                }
            });
        KernelCache::Full { n, values }
    }

    fn column(&self, i: usize, out: &mut [f64]) {
        match self {
            KernelCache::Full { n, values } => {
                for (o, &v) in out.iter_mut().zip(&values[i * n..(i + 1) * n]) {
                    *o = f64::from(v);
                }
            }
            KernelCache::OnDemand { rows, gamma } => {
                for (o, r) in out.iter_mut().zip(rows) {
                    *o = rbf(rows[i], r, *gamma);
                }
            }
        }
    }
}

struct Solution {
    alpha: Vec<f64>,
    intercept: f64,
    gap: f64,
    iterations: usize,
}

fn solve(rows: Vec<&[f64]>, y: &[f64], config: &SvmConfig) -> Solution {
    let n = y.len();
    let c = config.box_constraint;
    let gamma = 1.0 / (2.0 * config.kernel_scale * config.kernel_scale);
    let kernel = KernelCache::new(rows, gamma);

    let mut alpha = vec![0.0; n];
    // un-biased decision values; E_k = f[k] - y[k]
    let mut f = vec![0.0; n];
    let mut col_i = vec![0.0; n];
    let mut col_j = vec![0.0; n];

    let in_up = |a: f64, yk: f64| (yk > 0.0 && a < c) || (yk < 0.0 && a > 0.0);
    let in_low = |a: f64, yk: f64| (yk > 0.0 && a > 0.0) || (yk < 0.0 && a < c);

    let max_sweeps = 10 * config.max_passes;
    let mut best_gap = f64::INFINITY;
    let mut stale = 0;
    let mut iterations = 0;
    let mut gap;
    loop {
        // i: maximal -E over I_up
        let mut i = usize::MAX;
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for k in 0..n {
            let neg_e = y[k] - f[k];
            if in_up(alpha[k], y[k]) && neg_e > m_up {
                m_up = neg_e;
                i = k;
            }
            if in_low(alpha[k], y[k]) && neg_e < m_low {
                m_low = neg_e;
            }
        }
        gap = m_up - m_low;
        if i == usize::MAX || gap < config.tolerance {
            break;
        }

        kernel.column(i, &mut col_i);
        let k_ii = col_i[i];
        // j: second-order selection over I_low
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let neg_e = y[t] - f[t];
            if in_low(alpha[t], y[t]) && neg_e < m_up {
                let b = m_up - neg_e;
                // K(x, x) = 1 for the Gaussian kernel
                let mut a = k_ii + 1.0 - 2.0 * col_i[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -b * b / a;
                if score < best {
                    best = score;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break;
        }
        kernel.column(j, &mut col_j);

        let e_i = f[i] - y[i];
        let e_j = f[j] - y[j];
        let mut eta = k_ii + col_j[j] - 2.0 * col_i[j];
        if eta <= 0.0 {
            eta = TAU;
        }
        let (lo, hi) = if y[i] != y[j] {
            ((alpha[j] - alpha[i]).max(0.0), (c + alpha[j] - alpha[i]).min(c))
        } else {
            ((alpha[i] + alpha[j] - c).max(0.0), (alpha[i] + alpha[j]).min(c))
        };
        let aj_new = (alpha[j] + y[j] * (e_i - e_j) / eta).clamp(lo, hi);
        let d_j = aj_new - alpha[j];
        let ai_new = (alpha[i] - y[i] * y[j] * d_j).clamp(0.0, c);
        let d_i = ai_new - alpha[i];
        iterations += 1;
        if d_i == 0.0 && d_j == 0.0 {
            break;
        }
        alpha[i] = ai_new;
        alpha[j] = aj_new;
        let (si, sj) = (d_i * y[i], d_j * y[j]);
        for k in 0..n {
            f[k] += si * col_i[k] + sj * col_j[k];
        }

        if iterations % n == 0 {
            if gap < best_gap {
                best_gap = gap;
                stale = 0;
            } else {
                stale += 1;
            }
            if stale >= config.max_passes || iterations / n >= max_sweeps {
                break;
            }
        }
    }

    // intercept: average over free vectors, else midpoint of the feasible interval
    let (sum, count) = (0..n)
        .filter(|&k| alpha[k] > 0.0 && alpha[k] < c)
        .fold((0.0, 0usize), |(s, cnt), k| (s + y[k] - f[k], cnt + 1));
    let intercept = if count > 0 {
        sum / count as f64
    } else {
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for k in 0..n {
            let neg_e = y[k] - f[k];
            if in_up(alpha[k], y[k]) {
                m_up = m_up.max(neg_e);
            }
            if in_low(alpha[k], y[k]) {
                m_low = m_low.min(neg_e);
            }
        }
        match (m_up.is_finite(), m_low.is_finite()) {
            (true, true) => 0.5 * (m_up + m_low),
            (true, false) => m_up,
            (false, true) => m_low,
            (false, false) => 0.0,
        }
    };
    Solution {
        alpha,
        intercept,
        gap,
        iterations,
    }
}

/// Trains on labels {0, 1}; label 1 maps to `y = +1`.
pub fn svm_train(train: &Dataset, config: &SvmConfig) -> Result<SvmModel> {
    config.validate()?;
    check_training(train)?;
    let x = train.features();
    let y: Vec<f64> = train
        .labels()
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let rows: Vec<&[f64]> = x
        .axis_iter(Axis(0))
        .map(|r| r.to_slice().expect("dataset rows are contiguous"))
        .collect();
    let sol = solve(rows, &y, config);

    let support: Vec<usize> = (0..y.len()).filter(|&k| sol.alpha[k] > 0.0).collect();
    Ok(SvmModel {
        support_vectors: x.select(Axis(0), &support),
        dual_coefficients: support.iter().map(|&k| sol.alpha[k] * y[k]).collect(),
        intercept: sol.intercept,
        kernel_scale: config.kernel_scale,
        box_constraint: config.box_constraint,
        kkt_gap: sol.gap,
        iterations: sol.iterations,
    })
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn decision_value(&self, point: &[f64]) -> f64 {
        let gamma = 1.0 / (2.0 * self.kernel_scale * self.kernel_scale);
        self.support_vectors
            .axis_iter(Axis(0))
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| {
                coef * rbf(sv.as_slice().expect("contiguous"), point, gamma)
            })
            .sum::<f64>()
            + self.intercept
    }

    /// Dual objective `sum alpha - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
    pub fn dual_objective(&self) -> f64 {
        let gamma = 1.0 / (2.0 * self.kernel_scale * self.kernel_scale);
        let sv: Vec<Vec<f64>> = self
            .support_vectors
            .axis_iter(Axis(0))
            .map(|r| r.to_vec())
            .collect();
        let linear: f64 = self.dual_coefficients.iter().map(|c| c.abs()).sum();
        let mut quad = 0.0;
        for (a, ca) in sv.iter().zip(&self.dual_coefficients) {
            for (b, cb) in sv.iter().zip(&self.dual_coefficients) {
                quad += ca * cb * rbf(a, b, gamma);
            }
        }
        linear - 0.5 * quad
    }
}

/// Label 1 iff the decision value is strictly positive.
pub fn svm_predict(model: &SvmModel, points: ArrayView2<'_, f64>) -> Result<SvmPrediction> {
    check_points(model.n_features(), points)?;
    let decision_values: Vec<f64> = points
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| model.decision_value(&row.to_vec()))
        .collect();
    let labels = decision_values.iter().map(|&v| u8::from(v > 0.0)).collect();
    Ok(SvmPrediction {
        labels,
        decision_values,
    })
}
