//! Bayesian optimization of anomaly-detection classifiers.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dataspace`] loads or synthesises flow records and applies categorical
//!   mapping, duration derivation and min-max scaling.
//! * [`classifiers`] holds the from-scratch SVM (Gaussian kernel), k-NN and
//!   tree-ensemble (bagging / AdaBoost.M1) models.
//! * [`metrics`] computes the confusion matrix, accuracy, precision, recall and
//!   false alarm rate.
//! * [`surrogate`] is the Gaussian-process regression model.
//! * [`optimizer`] defines mixed search spaces, expected improvement and the
//!   sequential Bayesian optimization loop over a cross-validated cost.
//! * [`harness`] runs baseline-vs-tuned experiments and writes trial logs,
//!   convergence traces and contour grids.

pub mod classifiers;
pub mod dataspace;
mod error;
pub mod harness;
pub mod metrics;
mod numeric;
pub mod optimizer;
pub mod rng;
pub mod surrogate;

pub use error::{Error, Result};
