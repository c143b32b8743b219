//! Gaussian-process regression over encoded hyperparameter vectors.

mod gp;
mod hyper;
mod kernel;

pub use gp::{gp_fit, gp_posterior, GpModel, PosteriorMoments};
pub use hyper::{fit_kernel_hyperparams, log_marginal_likelihood, N_STARTS};
pub use kernel::{kernel_eval, KernelFamily, KernelSpec, NOISE_FLOOR};
