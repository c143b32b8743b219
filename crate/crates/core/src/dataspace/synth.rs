use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

const NORMAL_CLUSTERS: usize = 3;
const ANOMALY_CLUSTERS: usize = 2;
const CLUSTER_SPREAD: f64 = 1.0;
const OVERLAP_NOISE: f64 = 1.0;

/// Two-class benchmark standing in for labelled flow records.
///
/// Normal rows come from a mixture of Gaussian clusters, anomalies from their own
/// clusters. Along a random direction `w` the classes sit on opposite sides of
/// the origin:
///
/// ```text
/// t = s * (1 - difficulty) * (0.5 + 0.5 |e1|) + difficulty * e2,   s = +-1
/// ```
///
/// so `difficulty = 0` is linearly separable with margin 1, and raising it both
/// shrinks the margin and pulls the anomaly cluster centres towards the normal
/// ones. Each feature is finally stretched by a random factor in `[1, 1000]` so the
/// raw columns have very different magnitudes.
pub fn synthesize_benchmark(
    n_rows: usize,
    n_features: usize,
    anomaly_fraction: f64,
    difficulty: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_features < 2 {
        return Err(Error::Precondition(format!(
            "n_features must be at least 2, got {n_features}"
        )));
    }
    if !(anomaly_fraction > 0.0 && anomaly_fraction < 0.5) {
        return Err(Error::Precondition(format!(
            "anomaly_fraction must lie in (0, 0.5), got {anomaly_fraction}"
        )));
    }
    if !(0.0..=1.0).contains(&difficulty) {
        return Err(Error::Precondition(format!(
            "difficulty must lie in [0, 1], got {difficulty}"
        )));
    }
    let n_anomalies = ((n_rows as f64 * anomaly_fraction).round() as usize).max(1);
    if n_rows < n_anomalies + 1 {
        return Err(Error::Precondition(format!(
            "n_rows = {n_rows} too small for both classes"
        )));
    }

    let mut rng = rng_from_seed(seed);
    let d = n_features;
    let direction = unit(gaussian(&mut rng, d));
    let centre = |rng: &mut rand_chacha::ChaCha8Rng| reject(gaussian(rng, d), &direction);
    let normal_centres: Vec<Vec<f64>> = (0..NORMAL_CLUSTERS).map(|_| centre(&mut rng)).collect();
    let anomaly_centres: Vec<Vec<f64>> = (0..ANOMALY_CLUSTERS)
        .map(|k| {
            let own = centre(&mut rng);
            own.iter()
                .zip(&normal_centres[k % NORMAL_CLUSTERS])
                .map(|(a, n)| (1.0 - difficulty) * a + difficulty * n)
                .collect()
        })
        .collect();
    let stretch: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(0.0..3.0))).collect();
    let offset: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..100.0)).collect();

    let mut labels: Vec<u8> = (0..n_rows).map(|i| u8::from(i < n_anomalies)).collect();
    labels.shuffle(&mut rng);

    let mut features = Array2::zeros((n_rows, d));
    for (r, &label) in labels.iter().enumerate() {
        let centres = if label == 1 { &anomaly_centres } else { &normal_centres };
        let c = &centres[rng.random_range(0..centres.len())];
        let noise: Vec<f64> = gaussian(&mut rng, d).iter().map(|z| z * CLUSTER_SPREAD).collect();
        let perp = reject(noise, &direction);
        let sign = if label == 1 { 1.0 } else { -1.0 };
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let t = sign * (1.0 - difficulty) * (0.5 + 0.5 * e1.abs()) + difficulty * OVERLAP_NOISE * e2;
        for j in 0..d {
            let x = c[j] + perp[j] + t * direction[j];
            features[[r, j]] = offset[j] + stretch[j] * x;
        }
    }
    Dataset::from_matrix(features, labels)
}

fn gaussian<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Removes the component of `v` along the unit vector `w`.
fn reject(mut v: Vec<f64>, w: &[f64]) -> Vec<f64> {
    let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(w).for_each(|(a, b)| *a -= dot * b);
    v
}
