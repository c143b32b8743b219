//! Experiment runner: configuration, baseline-versus-tuned comparison per
//! classifier family, and CSV/JSON artifacts.

mod artifacts;
mod config;
mod run;

pub use artifacts::{emit_contour, emit_trace};
pub use config::{DataSource, ExperimentConfig};
pub use run::{
    load_surrogate, prepare_data, run_experiment, table_label, FamilyOutcome, FamilyReport, RunSummary,
    SplitMetrics, CONTOUR_FILE, SPACE_FILE, SUMMARY_CSV, SUMMARY_JSON, SURROGATE_FILE, TRACE_FILE, TRIALS_FILE,
};
