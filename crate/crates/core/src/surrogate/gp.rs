use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMoments {
    pub mean: f64,
    /// Standard deviation of the latent function (observation noise excluded).
    pub sd: f64,
}

/// Gaussian-process posterior over encoded points.
///
/// Observations are centred by their mean before conditioning; the mean is added
/// back in every prediction.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    mean: f64,
    kernel: KernelSpec,
    factor: Option<Cholesky<f64, Dyn>>,
    weights: DVector<f64>,
    jitter: f64,
}

/// Cholesky of `K + (noise + jitter) I`, escalating the jitter by 10x from
/// 1e-10 up to 1e-4 until the factorization succeeds.
pub(crate) fn factorize(gram: &DMatrix<f64>, noise: f64) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let n = gram.nrows();
    let with = |extra: f64| {
        let mut m = gram.clone();
        for i in 0..n {
            m[(i, i)] += noise + extra;
        }
        m.cholesky()
    };
    if let Some(c) = with(0.0) {
        return Some((c, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        if let Some(c) = with(jitter) {
            return Some((c, jitter));
        }
        jitter *= 10.0;
    }
    None
}

pub(crate) fn gram(kernel: &KernelSpec, inputs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval_unchecked(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn check_dim(kernel: &KernelSpec, x: &[f64]) -> Result<()> {
    if x.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

pub fn gp_fit(inputs: &[Vec<f64>], targets: &[f64], kernel: &KernelSpec) -> Result<GpModel> {
    if inputs.len() != targets.len() {
        return Err(Error::Precondition(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    for x in inputs {
        check_dim(kernel, x)?;
    }
    if targets.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite("GP targets".into()));
    }
    let n = targets.len();
    if n == 0 {
        return Ok(GpModel {
            inputs: Vec::new(),
            targets: Vec::new(),
            mean: 0.0,
            kernel: kernel.clone(),
            factor: None,
            weights: DVector::zeros(0),
            jitter: 0.0,
        });
    }
    let mean = targets.iter().sum::<f64>() / n as f64;
    let centred = DVector::from_iterator(n, targets.iter().map(|y| y - mean));
    let (factor, jitter) = factorize(&gram(kernel, inputs), kernel.noise_variance).ok_or_else(|| {
        Error::Numerical("covariance factorization failed after jitter escalation".into())
    })?;
    let weights = factor.solve(&centred);
    Ok(GpModel {
        inputs: inputs.to_vec(),
        targets: targets.to_vec(),
        mean,
        kernel: kernel.clone(),
        factor: Some(factor),
        weights,
        jitter,
    })
}

impl GpModel {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn n_points(&self) -> usize {
        self.targets.len()
    }

    /// Mean used to centre the targets (0 for an empty model).
    pub fn target_mean(&self) -> f64 {
        self.mean
    }

    /// Extra diagonal jitter the factorization needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn posterior(&self, x: &[f64]) -> Result<PosteriorMoments> {
        check_dim(&self.kernel, x)?;
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> PosteriorMoments {
        let prior = self.kernel.signal_variance;
        let Some(factor) = &self.factor else {
            return PosteriorMoments {
                mean: 0.0,
                sd: prior.sqrt(),
            };
        };
        let cross = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|xi| self.kernel.eval_unchecked(xi, x)),
        );
        let mean = self.mean + cross.dot(&self.weights);
        let v = factor
            .l_dirty()
            .solve_lower_triangular(&cross)
            .expect("Cholesky factor has a positive diagonal");
        let var = (prior - v.norm_squared()).max(0.0);
        PosteriorMoments {
            mean,
            sd: var.sqrt(),
        }
    }

    /// `log p(y | X, theta)` of the centred targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let Some(factor) = &self.factor else {
            return 0.0;
        };
        let n = self.targets.len() as f64;
        let fit: f64 = self
            .targets
            .iter()
            .zip(self.weights.iter())
            .map(|(y, a)| (y - self.mean) * a)
            .sum();
        let log_det_half: f64 = factor.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * fit - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

pub fn gp_posterior(model: &GpModel, x: &[f64]) -> Result<PosteriorMoments> {
    model.posterior(x)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::super::kernel::KernelFamily;
    use super::*;
    use crate::rng::rng_from_seed;

    /// Gauss-Jordan inverse with partial pivoting; test oracle only.
    fn dense_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = m.len();
        let mut a: Vec<Vec<f64>> = m
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| f64::from(u8::from(i == j))));
                r
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
                .unwrap();
            a.swap(col, pivot);
            let d = a[col][col];
            a[col].iter_mut().for_each(|v| *v /= d);
            for r in 0..n {
                if r != col {
                    let f = a[r][col];
                    let pivot_row = a[col].clone();
                    a[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        a.into_iter().map(|r| r[n..].to_vec()).collect()
    }

    fn dense_posterior(k: &KernelSpec, xs: &[Vec<f64>], ys: &[f64], q: &[f64]) -> (f64, f64, f64) {
        let n = xs.len();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                gram[i][j] = kernel_direct(k, &xs[i], &xs[j]) + if i == j { k.noise_variance } else { 0.0 };
            }
        }
        let inv = dense_inverse(&gram);
        let kx: Vec<f64> = xs.iter().map(|x| kernel_direct(k, x, q)).collect();
        let yc: Vec<f64> = ys.iter().map(|y| y - mean).collect();
        let mut mu = mean;
        let mut quad = 0.0;
        let mut fit = 0.0;
        for i in 0..n {
            for j in 0..n {
                mu += kx[i] * inv[i][j] * yc[j];
                quad += kx[i] * inv[i][j] * kx[j];
                fit += yc[i] * inv[i][j] * yc[j];
            }
        }
        let log_det = log_det_gauss(&gram);
        let lml = -0.5 * fit - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        (mu, (k.signal_variance - quad).max(0.0), lml)
    }

    fn log_det_gauss(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        let mut a = m.to_vec();
        let mut acc = 0.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
                .unwrap();
            a.swap(col, pivot);
            acc += a[col][col].abs().ln();
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                a[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
            }
        }
        acc
    }

    fn kernel_direct(k: &KernelSpec, u: &[f64], v: &[f64]) -> f64 {
        let r2: f64 = u
            .iter()
            .zip(v)
            .zip(&k.lengthscales)
            .map(|((a, b), l)| ((a - b) / l).powi(2))
            .sum();
        match k.family {
            KernelFamily::SquaredExponential => k.signal_variance * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                k.signal_variance * (1.0 + 5f64.sqrt() * r + 5.0 / 3.0 * r2) * (-(5f64.sqrt()) * r).exp()
            }
        }
    }

    fn random_instance(rng: &mut impl Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let ys = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (xs, ys)
    }

    #[test]
    fn single_noiseless_point_interpolates() {
        let k = KernelSpec::isotropic(KernelFamily::Matern52, 2, 0.3, 1.0, 0.0).unwrap();
        let m = gp_fit(&[vec![0.2, 0.7]], &[3.5], &k).unwrap();
        let p = m.posterior(&[0.2, 0.7]).unwrap();
        assert!((p.mean - 3.5).abs() < 1e-8);
        assert!(p.sd < 1e-4, "sd {}", p.sd);
        assert!(p.sd * p.sd < 1e-8);
    }

    #[test]
    fn empty_model_returns_prior() {
        let k = KernelSpec::isotropic(KernelFamily::Matern52, 1, 0.3, 4.0, 1e-6).unwrap();
        let m = gp_fit(&[], &[], &k).unwrap();
        let p = m.posterior(&[0.5]).unwrap();
        assert_eq!((p.mean, p.sd), (0.0, 2.0));
    }

    #[test]
    fn far_from_data_reverts_to_prior() {
        let k = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1, 0.01, 2.0, 1e-6).unwrap();
        let m = gp_fit(&[vec![0.0], vec![0.05]], &[1.0, 3.0], &k).unwrap();
        let p = m.posterior(&[1.0]).unwrap();
        assert!((p.mean - 2.0).abs() < 1e-3);
        assert!((p.sd - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn matches_dense_solve() {
        let mut rng = rng_from_seed(17);
        for &n in &[3usize, 5] {
            let (xs, ys) = random_instance(&mut rng, n, 2);
            let k = KernelSpec::new(KernelFamily::Matern52, vec![0.4, 0.7], 1.3, 1e-4).unwrap();
            let m = gp_fit(&xs, &ys, &k).unwrap();
            for _ in 0..5 {
                let q: Vec<f64> = (0..2).map(|_| rng.random()).collect();
                let (mu, var, lml) = dense_posterior(&k, &xs, &ys, &q);
                let p = m.posterior(&q).unwrap();
                assert!((p.mean - mu).abs() < 1e-8);
                assert!((p.sd * p.sd - var).abs() < 1e-8);
                assert!((m.log_marginal_likelihood() - lml).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn variance_at_training_inputs_is_bounded_by_noise() {
        let mut rng = rng_from_seed(2);
        let (xs, ys) = random_instance(&mut rng, 8, 3);
        let k = KernelSpec::isotropic(KernelFamily::Matern52, 3, 0.5, 1.0, 1e-3).unwrap();
        let m = gp_fit(&xs, &ys, &k).unwrap();
        for x in &xs {
            let p = m.posterior(x).unwrap();
            assert!(p.sd * p.sd <= k.noise_variance + 1e-8);
        }
    }

    #[test]
    fn more_data_never_increases_variance() {
        let mut rng = rng_from_seed(8);
        let k = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1, 0.15, 1.0, 1e-6).unwrap();
        for _ in 0..20 {
            let (xs, ys) = random_instance(&mut rng, 6, 1);
            let queries: Vec<f64> = (0..25).map(|i| i as f64 / 24.0).collect();
            let mut prev: Vec<f64> = vec![f64::INFINITY; queries.len()];
            for n in 0..=xs.len() {
                let m = gp_fit(&xs[..n], &ys[..n], &k).unwrap();
                for (q, p) in queries.iter().zip(prev.iter_mut()) {
                    let sd = m.posterior(&[*q]).unwrap().sd;
                    assert!(sd <= *p + 1e-9);
                    *p = sd;
                }
            }
        }
    }

    #[test]
    fn duplicate_inputs_need_jitter_only_when_noise_is_tiny() {
        let k = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1, 0.3, 1.0, 0.0).unwrap();
        let xs = vec![vec![0.5], vec![0.5], vec![0.5]];
        let m = gp_fit(&xs, &[1.0, 1.0, 1.0], &k).unwrap();
        assert!(m.jitter() <= 1e-4);
        assert!(gp_fit(&xs, &[1.0], &k).is_err());
        assert!(m.posterior(&[0.1, 0.2]).is_err());
    }
}
