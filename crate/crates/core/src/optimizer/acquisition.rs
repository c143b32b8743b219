use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::space::{encode_point, ParamKind, SearchSpace};
use crate::numeric::golden_section_max;
use crate::rng::rng_from_seed;
use crate::surrogate::{GpModel, PosteriorMoments};

pub const N_CANDIDATES: usize = 2000;
pub const N_REFINED: usize = 5;
const REFINE_CYCLES: usize = 2;
const REFINE_STEPS: usize = 30;

/// The first `n` primes, used as Halton bases.
fn primes(n: usize) -> Vec<u32> {
    let mut found: Vec<u32> = Vec::with_capacity(n);
    let mut c = 2;
    while found.len() < n {
        if found.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            found.push(c);
        }
        c += 1;
    }
    found
}

/// Closed-form expected improvement below `best` under a Gaussian posterior.
pub fn expected_improvement(post: PosteriorMoments, best: f64) -> f64 {
    let gain = best - post.mean;
    if post.sd <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / post.sd;
    let normal = Normal::standard();
    (gain * normal.cdf(z) + post.sd * normal.pdf(z)).max(0.0)
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let inv = 1.0 / f64::from(base);
    let (mut value, mut scale) = (0.0, inv);
    while i > 0 {
        value += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    value
}

/// `count` Halton points in `[0, 1)^dim` (indices from 1), shifted modulo 1 by a
/// seeded random vector.
pub fn shifted_halton(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let bases = primes(dim);
    (1..=count as u64)
        .map(|i| {
            bases
                .iter()
                .zip(&shift)
                .map(|(&base, s)| (radical_inverse(i, base) + s).fract())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Scored {
    x: Vec<f64>,
    ei: f64,
    mean: f64,
}

/// Higher EI first, then lower posterior mean.
fn rank(a: &Scored, b: &Scored) -> Ordering {
    b.ei.total_cmp(&a.ei).then(a.mean.total_cmp(&b.mean))
}

fn score(model: &GpModel, best: f64, x: Vec<f64>) -> Scored {
    let post = model.posterior_unchecked(&x);
    Scored {
        ei: expected_improvement(post, best),
        mean: post.mean,
        x,
    }
}

/// Encoded coordinates that belong to continuous parameters.
fn continuous_coordinates(space: &SearchSpace) -> Vec<usize> {
    space
        .params()
        .iter()
        .zip(space.offsets())
        .filter(|(p, _)| matches!(p.kind, ParamKind::Continuous { .. }))
        .map(|(_, at)| at)
        .collect()
}

fn refine(model: &GpModel, best: f64, coords: &[usize], start: Scored) -> Scored {
    let mut current = start;
    for _ in 0..REFINE_CYCLES {
        for &c in coords {
            let mut probe = current.x.clone();
            let (arg, ei) = golden_section_max(0.0, 1.0, REFINE_STEPS, |t| {
                probe[c] = t;
                expected_improvement(model.posterior_unchecked(&probe), best)
            });
            if ei > current.ei {
                let mut x = current.x.clone();
                x[c] = arg;
                current = score(model, best, x);
            }
        }
    }
    current
}

/// Maximizes EI over the space and returns the encoded winner.
///
/// Candidates are quasi-random assignments (integers snapped, categoricals
/// one-hot) so every candidate decodes to itself; the best few are then
/// polished along their continuous coordinates. Ties in EI go to the lower
/// posterior mean, then to the earlier candidate.
pub fn propose_next(model: &GpModel, space: &SearchSpace, best: f64, seed: u64) -> Vec<f64> {
    let candidates: Vec<Vec<f64>> = shifted_halton(N_CANDIDATES, space.params().len(), seed)
        .iter()
        .map(|u| encode_point(space, &space.sample_unit(u)).expect("sampled assignments are in bounds"))
        .collect();
    let mut scored: Vec<(usize, Scored)> = candidates
        .into_par_iter()
        .map(|x| score(model, best, x))
        .enumerate()
        .collect();
    scored.sort_by(|a, b| rank(&a.1, &b.1).then(a.0.cmp(&b.0)));

    let coords = continuous_coordinates(space);
    let mut winner = scored[0].1.clone();
    if !coords.is_empty() {
        let refined: Vec<Scored> = scored[..N_REFINED.min(scored.len())]
            .par_iter()
            .map(|(_, s)| refine(model, best, &coords, s.clone()))
            .collect();
        for r in refined {
            if rank(&r, &winner) == Ordering::Less {
                winner = r;
            }
        }
    }
    winner.x
}
