//! Kernel hyperparameter selection by maximizing the log marginal likelihood.
//!
//! Parameters are searched in log space: one lengthscale per input dimension,
//! then the signal variance, then the noise variance. Each start runs cyclic
//! coordinate-wise golden-section searches over the full box.

use rand::Rng;
use rayon::prelude::*;

use super::gp::{factorize, gram};
use super::kernel::{KernelFamily, KernelSpec, NOISE_FLOOR};
use crate::numeric::golden_section_max;
use crate::rng::child_rng;
use crate::{Error, Result};

pub const N_STARTS: usize = 8;
const MAX_CYCLES: usize = 4;
const GOLDEN_STEPS: usize = 24;
const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 10.0);

/// Log-space box for every searched parameter.
fn bounds(dim: usize, targets: &[f64]) -> Vec<(f64, f64)> {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let mut b = vec![(LENGTHSCALE_BOUNDS.0.ln(), LENGTHSCALE_BOUNDS.1.ln()); dim];
    b.push((1e-6f64.ln(), (100.0 * var + 1e-6).ln()));
    b.push((NOISE_FLOOR.ln(), (var + NOISE_FLOOR).ln()));
    b
}

fn spec_from(family: KernelFamily, theta: &[f64]) -> KernelSpec {
    let d = theta.len() - 2;
    KernelSpec {
        family,
        lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
        signal_variance: theta[d].exp(),
        noise_variance: theta[d + 1].exp().max(NOISE_FLOOR),
    }
}

/// Log marginal likelihood of centred targets, or `-inf` when the covariance
/// cannot be factorized.
pub fn log_marginal_likelihood(inputs: &[Vec<f64>], targets: &[f64], kernel: &KernelSpec) -> f64 {
    let n = targets.len();
    let mean = targets.iter().sum::<f64>() / n as f64;
    let centred = nalgebra::DVector::from_iterator(n, targets.iter().map(|y| y - mean));
    let Some((factor, _)) = factorize(&gram(kernel, inputs), kernel.noise_variance) else {
        return f64::NEG_INFINITY;
    };
    let weights = factor.solve(&centred);
    let log_det_half: f64 = factor.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    let value = -0.5 * centred.dot(&weights) - log_det_half
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if value.is_finite() {
        value
    } else {
        f64::NEG_INFINITY
    }
}

fn local_search(
    family: KernelFamily,
    inputs: &[Vec<f64>],
    targets: &[f64],
    bounds: &[(f64, f64)],
    start: Vec<f64>,
) -> (Vec<f64>, f64) {
    let eval = |theta: &[f64]| log_marginal_likelihood(inputs, targets, &spec_from(family, theta));
    let mut theta = start;
    let mut best = eval(&theta);
    for _ in 0..MAX_CYCLES {
        let before = best;
        for k in 0..theta.len() {
            let mut probe = theta.clone();
            let (arg, value) = golden_section_max(bounds[k].0, bounds[k].1, GOLDEN_STEPS, |t| {
                probe[k] = t;
                eval(&probe)
            });
            if value > best {
                theta[k] = arg;
                best = value;
            }
        }
        if best.is_finite() && before.is_finite() && best - before < 1e-6 {
            break;
        }
    }
    (theta, best)
}

/// Multi-start maximization of the log marginal likelihood.
///
/// Start 0 is a fixed default (lengthscale 0.25, signal variance `var(y)`, noise
/// `1e-3 var(y)`); the rest are drawn log-uniformly inside the box from
/// per-start child streams of `seed`. The best start wins, ties to the lower
/// start index.
pub fn fit_kernel_hyperparams(
    inputs: &[Vec<f64>],
    targets: &[f64],
    family: KernelFamily,
    seed: u64,
) -> Result<KernelSpec> {
    if targets.len() < 2 || inputs.len() != targets.len() {
        return Err(Error::Precondition(format!(
            "hyperparameter fit needs at least 2 matching points, got {} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let dim = inputs[0].len();
    if inputs.iter().any(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: inputs.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
        });
    }
    let bounds = bounds(dim, targets);
    let clamp = |k: usize, v: f64| v.clamp(bounds[k].0, bounds[k].1);

    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let mut default_start: Vec<f64> = vec![0.25f64.ln(); dim];
    default_start.push((var + 1e-6).ln());
    default_start.push((1e-3 * var + NOISE_FLOOR).ln());
    let default_start: Vec<f64> = default_start
        .into_iter()
        .enumerate()
        .map(|(k, v)| clamp(k, v))
        .collect();

    let starts: Vec<Vec<f64>> = (0..N_STARTS)
        .map(|s| {
            if s == 0 {
                default_start.clone()
            } else {
                let mut rng = child_rng(seed, s as u64);
                bounds
                    .iter()
                    .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                    .collect()
            }
        })
        .collect();

    let results: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|start| local_search(family, inputs, targets, &bounds, start))
        .collect();
    let (theta, value) = results
        .into_iter()
        .reduce(|best, next| if next.1 > best.1 { next } else { best })
        .expect("at least one start");
    if !value.is_finite() {
        return Err(Error::Numerical(
            "every hyperparameter start failed to factorize the covariance".into(),
        ));
    }
    Ok(spec_from(family, &theta))
}
