//! Sequential Bayesian optimization and the random-search baseline.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use super::acquisition::propose_next;
use super::objective::Objective;
use super::space::{decode_point, encode_point, SearchSpace};
use super::trial::TrialLog;
use crate::rng::{child_rng, child_seed};
use crate::surrogate::{fit_kernel_hyperparams, gp_fit, GpModel, KernelFamily};
use crate::{Error, Result};

const DESIGN_STREAM: u64 = 0xde51;
const RANDOM_STREAM: u64 = 0x7a4d;
const HYPER_STREAM: u64 = 1 << 32;
const PROPOSAL_STREAM: u64 = 2 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoOptions {
    /// Total evaluations, initial design included.
    pub budget: usize,
    pub n_init: usize,
    pub seed: u64,
    pub kernel: KernelFamily,
}

impl BoOptions {
    pub fn new(budget: usize, n_init: usize, seed: u64) -> Self {
        BoOptions {
            budget,
            n_init,
            seed,
            kernel: KernelFamily::default(),
        }
    }
}

impl Default for BoOptions {
    fn default() -> Self {
        BoOptions::new(30, 5, 0)
    }
}

/// Latin hypercube over the parameters: each parameter's unit interval is cut
/// into `n` strata and every stratum is used once.
fn latin_hypercube(space: &SearchSpace, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = child_rng(seed, DESIGN_STREAM);
    let dims = space.params().len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dims);
    for _ in 0..dims {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        columns.push(
            strata
                .into_iter()
                .map(|s| (s as f64 + rng.random::<f64>()) / n as f64)
                .collect(),
        );
    }
    (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

/// Encoded points and objectives of every trial in `log`.
pub fn training_data(space: &SearchSpace, log: &TrialLog) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let inputs = log
        .trials()
        .iter()
        .map(|t| encode_point(space, &space.canonical(&t.params)?))
        .collect::<Result<_>>()?;
    Ok((inputs, log.trials().iter().map(|t| t.objective).collect()))
}

/// Lowest posterior mean over the model's own inputs, the reference point for
/// expected improvement.
pub fn incumbent(model: &GpModel) -> f64 {
    model
        .inputs()
        .iter()
        .map(|x| model.posterior_unchecked(x).mean)
        .fold(f64::INFINITY, f64::min)
}

/// GP surrogate of a log, with hyperparameters refitted under `seed`, and its
/// incumbent.
pub fn fit_surrogate(
    space: &SearchSpace,
    log: &TrialLog,
    kernel: KernelFamily,
    seed: u64,
) -> Result<(GpModel, f64)> {
    let (inputs, targets) = training_data(space, log)?;
    let spec = fit_kernel_hyperparams(&inputs, &targets, kernel, seed)?;
    let model = gp_fit(&inputs, &targets, &spec)?;
    let best = incumbent(&model);
    Ok((model, best))
}

/// Minimizes `objective` over `space`: a seeded Latin-hypercube design of
/// `n_init` points, then one expected-improvement proposal per remaining
/// evaluation, refitting the surrogate after every result.
pub fn bo_minimize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    options: &BoOptions,
) -> Result<TrialLog> {
    let BoOptions {
        budget,
        n_init,
        seed,
        kernel,
    } = *options;
    if n_init < 2 || budget < n_init {
        return Err(Error::Config(format!(
            "need budget >= n_init >= 2, got budget {budget} and n_init {n_init}"
        )));
    }
    let start = Instant::now();
    let mut log = TrialLog::new();
    for u in latin_hypercube(space, n_init, seed) {
        let params = space.sample_unit(&u);
        let j = objective.evaluate(&params)?;
        log.record(params, j, start.elapsed().as_secs_f64());
    }
    for step in log.len()..budget {
        let (model, incumbent) = fit_surrogate(space, &log, kernel, child_seed(seed, HYPER_STREAM + step as u64))?;
        let x = propose_next(&model, space, incumbent, child_seed(seed, PROPOSAL_STREAM + step as u64));
        let params = decode_point(space, &x);
        let j = objective.evaluate(&params)?;
        log.record(params, j, start.elapsed().as_secs_f64());
    }
    Ok(log)
}

/// Uniform sampling baseline (log-uniform on log-scaled parameters).
pub fn random_search<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
) -> Result<TrialLog> {
    if budget == 0 {
        return Err(Error::Config("random search needs a budget of at least 1".into()));
    }
    let start = Instant::now();
    let mut rng = child_rng(seed, RANDOM_STREAM);
    let mut log = TrialLog::new();
    for _ in 0..budget {
        let u: Vec<f64> = (0..space.params().len()).map(|_| rng.random()).collect();
        let params = space.sample_unit(&u);
        let j = objective.evaluate(&params)?;
        log.record(params, j, start.elapsed().as_secs_f64());
    }
    Ok(log)
}
