//! `key = value` experiment configuration.
//!
//! ```text
//! # data: either a CSV with its schema, or the synthetic generator
//! csv_path = data/flows.csv
//! schema_path = data/flows.schema
//! # synthetic_rows = 5000
//! # synthetic_features = 14
//! # anomaly_fraction = 0.3333
//! # difficulty = 0.3
//!
//! families = svm, knn, ensemble
//! budget = 30
//! n_init = 5
//! folds = 5
//! seed = 7
//! test_fraction = 0.2
//! output_dir = runs/iscx
//! kernel = matern52
//! contour_resolution = 50
//!
//! # search-space overrides: continuous lo hi [log] | integer lo hi | categorical a,b,...
//! space.svm.box_constraint = continuous 0.01 100 log
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::optimizer::{ClassifierFamily, ParamSpec, SearchSpace};
use crate::surrogate::KernelFamily;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv {
        data: PathBuf,
        schema: PathBuf,
    },
    Synthetic {
        rows: usize,
        features: usize,
        anomaly_fraction: f64,
        difficulty: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub families: Vec<ClassifierFamily>,
    pub space_overrides: Vec<(ClassifierFamily, ParamSpec)>,
    pub budget: usize,
    pub n_init: usize,
    pub folds: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub output_dir: PathBuf,
    pub kernel: KernelFamily,
    pub contour_resolution: usize,
}

impl ExperimentConfig {
    /// Defaults for everything but the data source and output directory.
    pub fn new(source: DataSource, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            source,
            families: ClassifierFamily::ALL.to_vec(),
            space_overrides: Vec::new(),
            budget: 30,
            n_init: 5,
            folds: 5,
            seed: 0,
            test_fraction: 0.2,
            output_dir: output_dir.into(),
            kernel: KernelFamily::default(),
            contour_resolution: 50,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut csv_path = None;
        let mut schema_path = None;
        let mut rows = None;
        let mut features = None;
        let mut anomaly_fraction = None;
        let mut difficulty = None;
        let mut output_dir = None;
        let mut cfg = ExperimentConfig::new(DataSource::Csv { data: PathBuf::new(), schema: PathBuf::new() }, "");

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Config(format!("line {}: {m}", i + 1));
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let num = |what: &str| -> Result<f64> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("{what} must be a number, got `{value}`")))
            };
            let int = |what: &str| -> Result<usize> {
                value.parse().map_err(|_| err(format!("{what} must be a non-negative integer, got `{value}`")))
            };
            let path = || base_dir.join(value);
            match key {
                "csv_path" => csv_path = Some(path()),
                "schema_path" => schema_path = Some(path()),
                "synthetic_rows" => rows = Some(int(key)?),
                "synthetic_features" => features = Some(int(key)?),
                "anomaly_fraction" => anomaly_fraction = Some(num(key)?),
                "difficulty" => difficulty = Some(num(key)?),
                "families" => {
                    cfg.families = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?;
                    cfg.families.sort();
                    cfg.families.dedup();
                }
                "budget" => cfg.budget = int(key)?,
                "n_init" => cfg.n_init = int(key)?,
                "folds" => cfg.folds = int(key)?,
                "seed" => cfg.seed = value.parse().map_err(|_| err(format!("seed must be an unsigned integer, got `{value}`")))?,
                "test_fraction" => cfg.test_fraction = num(key)?,
                "output_dir" => output_dir = Some(path()),
                "kernel" => cfg.kernel = value.parse()?,
                "contour_resolution" => cfg.contour_resolution = int(key)?,
                _ if key.starts_with("space.") => {
                    let mut parts = key.splitn(3, '.').skip(1);
                    let (Some(family), Some(name)) = (parts.next(), parts.next()) else {
                        return Err(err(format!("expected `space.<family>.<param>`, got `{key}`")));
                    };
                    let family: ClassifierFamily = family.parse()?;
                    let spec = parse_param(name, value).map_err(err)?;
                    spec.validate()?;
                    cfg.space_overrides.push((family, spec));
                }
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }

        cfg.source = match (csv_path, schema_path, rows) {
            (Some(data), Some(schema), None) => DataSource::Csv { data, schema },
            (None, None, Some(rows)) => DataSource::Synthetic {
                rows,
                features: features.unwrap_or(14),
                anomaly_fraction: anomaly_fraction.unwrap_or(1.0 / 3.0),
                difficulty: difficulty.unwrap_or(0.3),
            },
            _ => {
                return Err(Error::Config(
                    "give either both csv_path and schema_path, or synthetic_rows".into(),
                ))
            }
        };
        cfg.output_dir = output_dir.ok_or_else(|| Error::Config("missing output_dir".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.families.is_empty() {
            return fail("select at least one classifier family".into());
        }
        if self.budget < 2 {
            return fail(format!("budget must be at least 2, got {}", self.budget));
        }
        if self.n_init < 2 || self.n_init > self.budget {
            return fail(format!("n_init must lie in [2, budget], got {}", self.n_init));
        }
        if self.folds < 2 {
            return fail(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if self.contour_resolution < 2 {
            return fail(format!("contour_resolution must be at least 2, got {}", self.contour_resolution));
        }
        Ok(())
    }

    /// Default space of `family` for `n_train` rows with this config's
    /// overrides applied.
    pub fn space_for(&self, family: ClassifierFamily, n_train: usize) -> Result<SearchSpace> {
        self.space_overrides
            .iter()
            .filter(|(f, _)| *f == family)
            .try_fold(family.default_space(n_train), |space, (_, spec)| space.with_param(spec.clone()))
    }
}

fn parse_param(name: &str, value: &str) -> std::result::Result<ParamSpec, String> {
    let mut words = value.split_whitespace();
    let kind = words.next().unwrap_or("");
    let rest: Vec<&str> = words.collect();
    let number = |s: &str| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let integer = |s: &str| s.parse::<i64>().map_err(|_| format!("`{s}` is not an integer"));
    match (kind, rest.as_slice()) {
        ("continuous", [lo, hi]) => Ok(ParamSpec::continuous(name, number(lo)?, number(hi)?, false)),
        ("continuous", [lo, hi, "log"]) => Ok(ParamSpec::continuous(name, number(lo)?, number(hi)?, true)),
        ("integer", [lo, hi]) => Ok(ParamSpec::integer(name, integer(lo)?, integer(hi)?)),
        ("categorical", levels) if !levels.is_empty() => {
            let joined = levels.join(" ");
            let levels: Vec<&str> = joined.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            Ok(ParamSpec::categorical(name, &levels))
        }
        _ => Err(format!(
            "cannot parse range `{value}` for `{name}`; expected `continuous lo hi [log]`, `integer lo hi` or `categorical a,b,...`"
        )),
    }
}
