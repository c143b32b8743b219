use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{emit_contour, emit_trace, flush, writer};
use super::config::{DataSource, ExperimentConfig};
use crate::classifiers::ClassifierConfig;
use crate::dataspace::{load_csv, stratified_split, synthesize_benchmark, Dataset, Preprocessor, Schema};
use crate::metrics::{confusion, report, MetricsReport};
use crate::optimizer::{bo_minimize, fit_surrogate, incumbent, training_data, Assignment, BoOptions, ClassifierFamily, ObjectiveSpec, SearchSpace, TrialLog};
use crate::rng::child_seed;
use crate::surrogate::{gp_fit, GpModel, KernelSpec};
use crate::{Error, Result};

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const TRACE_FILE: &str = "trace.csv";
pub const SPACE_FILE: &str = "space.json";
pub const SURROGATE_FILE: &str = "surrogate.json";
pub const CONTOUR_FILE: &str = "contour.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";

const SPLIT_STREAM: u64 = 1;
const SYNTH_STREAM: u64 = 2;
const FAMILY_STREAM: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: ClassifierFamily,
    pub baseline_config: ClassifierConfig,
    pub baseline: SplitMetrics,
    pub tuned_config: ClassifierConfig,
    pub tuned: SplitMetrics,
    pub best_params: Assignment,
    /// Cross-validated objective of the best trial.
    pub best_objective: f64,
    pub evaluations: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub family: ClassifierFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<FamilyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub families: Vec<FamilyOutcome>,
    pub elapsed_seconds: f64,
}

impl RunSummary {
    pub fn failures(&self) -> impl Iterator<Item = &FamilyOutcome> {
        self.families.iter().filter(|f| f.error.is_some())
    }

    pub fn report(&self, family: ClassifierFamily) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.family == family)?.report.as_ref()
    }
}

/// Row labels of the results table, untuned then tuned.
pub fn table_label(family: ClassifierFamily, tuned: bool) -> &'static str {
    match (family, tuned) {
        (ClassifierFamily::Svm, false) => "SVM-RBF",
        (ClassifierFamily::Knn, false) => "K-NN (k=5)",
        (ClassifierFamily::Ensemble, false) => "Ensemble",
        (ClassifierFamily::Svm, true) => "BO-SVM",
        (ClassifierFamily::Knn, true) => "BO-k-NN",
        (ClassifierFamily::Ensemble, true) => "BO-Ensemble",
    }
}

/// Loads the configured data, splits it and fits preprocessing on the
/// training part. Returns `(train, test)`.
pub fn prepare_data(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let raw = match &config.source {
        DataSource::Csv { data, schema } => load_csv(data, &Schema::from_path(schema)?)?,
        DataSource::Synthetic {
            rows,
            features,
            anomaly_fraction,
            difficulty,
        } => synthesize_benchmark(*rows, *features, *anomaly_fraction, *difficulty, child_seed(config.seed, SYNTH_STREAM))?,
    };
    let (train, test) = stratified_split(&raw, config.test_fraction, child_seed(config.seed, SPLIT_STREAM))?;
    let (pre, train) = Preprocessor::fit(train)?;
    let test = pre.transform(test)?;
    Ok((train, test))
}

fn evaluate(config: &ClassifierConfig, train: &Dataset, test: &Dataset, seed: u64) -> Result<SplitMetrics> {
    let model = config.train(train, seed)?;
    let score = |d: &Dataset| -> Result<MetricsReport> {
        let predicted = model.predict(d.features().view())?;
        Ok(report(&confusion(&predicted, d.labels())?))
    };
    Ok(SplitMetrics {
        train: score(train)?,
        test: score(test)?,
    })
}

fn family_dir(output: &Path, family: ClassifierFamily) -> PathBuf {
    output.join(family.to_string())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn run_family(
    config: &ExperimentConfig,
    family: ClassifierFamily,
    train: &Dataset,
    test: &Dataset,
) -> Result<FamilyReport> {
    let start = Instant::now();
    let seed = child_seed(config.seed, FAMILY_STREAM + family as u64);
    let n_train = train.n_rows();
    let dir = family_dir(&config.output_dir, family);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let baseline_config = family.baseline(n_train);
    let baseline = evaluate(&baseline_config, train, test, child_seed(seed, 1))?;

    let space = config.space_for(family, n_train)?;
    let objective = ObjectiveSpec::new(family, train.clone(), config.folds, child_seed(seed, 2))?;
    let options = BoOptions {
        budget: config.budget,
        n_init: config.n_init,
        seed: child_seed(seed, 3),
        kernel: config.kernel,
    };
    let log = bo_minimize(&objective, &space, &options)?;
    let best = log.best().expect("budget is at least 2").clone();
    let tuned_config = family.config_for(&best.params, n_train)?;
    let tuned = evaluate(&tuned_config, train, test, child_seed(seed, 1))?;

    log.write(&dir.join(TRIALS_FILE))?;
    emit_trace(&log, &dir.join(TRACE_FILE))?;
    write_json(&space, &dir.join(SPACE_FILE))?;
    let (model, incumbent) = fit_surrogate(&space, &log, config.kernel, child_seed(seed, 4))?;
    write_json(model.kernel(), &dir.join(SURROGATE_FILE))?;
    if let [px, py, ..] = space.params() {
        emit_contour(&model, &space, &px.name, &py.name, config.contour_resolution, &best.params, incumbent, &dir.join(CONTOUR_FILE))?;
    }

    Ok(FamilyReport {
        family,
        baseline_config,
        baseline,
        tuned_config,
        tuned,
        best_params: best.params,
        best_objective: best.objective,
        evaluations: log.len(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

fn write_summary_csv(summary: &RunSummary, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["Model".to_string()];
    for split in ["Train", "Test"] {
        header.extend(MetricsReport::CSV_HEADER.iter().map(|h| format!("{split} {h}")));
    }
    w.write_record(&header)?;
    for tuned in [false, true] {
        for outcome in &summary.families {
            let mut row = vec![table_label(outcome.family, tuned).to_string()];
            match &outcome.report {
                Some(r) => {
                    let m = if tuned { r.tuned } else { r.baseline };
                    row.extend(m.train.csv_cells());
                    row.extend(m.test.csv_cells());
                }
                None => row.extend(std::iter::repeat_n("NA".to_string(), 8)),
            }
            w.write_record(&row)?;
        }
    }
    flush(w, path)
}

/// Runs every configured family (concurrently, failures isolated) and writes
/// per-family artifacts plus `summary.csv` and `summary.json` under the output
/// directory. Data errors abort the run; a family that fails is reported in
/// the summary while the others complete.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    let (train, test) = prepare_data(config)?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let families: Vec<FamilyOutcome> = config
        .families
        .par_iter()
        .map(|&family| match run_family(config, family, &train, &test) {
            Ok(report) => FamilyOutcome {
                family,
                report: Some(report),
                error: None,
            },
            Err(e) => FamilyOutcome {
                family,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let summary = RunSummary {
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        seed: config.seed,
        families,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    write_summary_csv(&summary, &out.join(SUMMARY_CSV))?;
    write_json(&summary, &out.join(SUMMARY_JSON))?;
    Ok(summary)
}

/// Surrogate of a finished family run, rebuilt from its saved trials, space and
/// kernel. Returns the model, the space, the log and the EI incumbent.
pub fn load_surrogate(dir: &Path) -> Result<(GpModel, SearchSpace, TrialLog, f64)> {
    let space: SearchSpace = read_json(&dir.join(SPACE_FILE))?;
    let kernel: KernelSpec = read_json(&dir.join(SURROGATE_FILE))?;
    let log = TrialLog::read(&dir.join(TRIALS_FILE))?;
    if log.is_empty() {
        return Err(Error::Empty(format!("{}", dir.join(TRIALS_FILE).display())));
    }
    let (inputs, targets) = training_data(&space, &log)?;
    let model = gp_fit(&inputs, &targets, &kernel)?;
    let best = incumbent(&model);
    Ok((model, space, log, best))
}
