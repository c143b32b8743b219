//! Search spaces, expected improvement and the Bayesian optimization loop.

mod acquisition;
pub mod benchmarks;
mod bo;
mod objective;
mod space;
mod trial;

pub use acquisition::{expected_improvement, propose_next, shifted_halton, N_CANDIDATES, N_REFINED};
pub use bo::{bo_minimize, fit_surrogate, incumbent, random_search, training_data, BoOptions};
pub use objective::{
    ClassifierFamily, FnObjective, Objective, ObjectiveSpec, BOX_CONSTRAINT, DISTANCE, ENSEMBLE_TREES,
    KERNEL_SCALE, MAHALANOBIS_RIDGE, MAX_NUM_SPLITS, METHOD, NUM_NEIGHBORS,
};
pub use space::{decode_point, encode_point, Assignment, ParamKind, ParamSpec, ParamValue, SearchSpace};
pub use trial::{Trial, TrialLog};
