use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelFamily {
    SquaredExponential,
    #[default]
    Matern52,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squaredexponential" | "se" => Ok(KernelFamily::SquaredExponential),
            "matern52" => Ok(KernelFamily::Matern52),
            _ => Err(Error::Config(format!("unknown kernel family `{s}`"))),
        }
    }
}

/// Stationary ARD kernel with additive observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn new(
        family: KernelFamily,
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let spec = KernelSpec {
            family,
            lengthscales,
            signal_variance,
            noise_variance: noise_variance.max(NOISE_FLOOR),
        };
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !spec.lengthscales.iter().all(|&l| ok(l)) || !ok(spec.signal_variance) || !ok(spec.noise_variance) {
            return Err(Error::Numerical(format!("invalid kernel parameters {spec:?}")));
        }
        Ok(spec)
    }

    /// Isotropic kernel over `dim` inputs.
    pub fn isotropic(family: KernelFamily, dim: usize, lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        KernelSpec::new(family, vec![lengthscale; dim], signal_variance, noise_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Covariance without the noise term; callers have checked dimensions.
    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        let r2: f64 = u
            .iter()
            .zip(v)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let z = (a - b) / l;
                z * z
            })
            .sum();
        match self.family {
            KernelFamily::SquaredExponential => self.signal_variance * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let s5r = (5.0 * r2).sqrt();
                self.signal_variance * (1.0 + s5r + 5.0 * r2 / 3.0) * (-s5r).exp()
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    for w in [u, v] {
        if w.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: w.len(),
            });
        }
    }
    Ok(spec.eval_unchecked(u, v))
}
