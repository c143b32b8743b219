use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use ids_bayesopt::dataspace::{synthesize_benchmark, write_csv, Schema};
use ids_bayesopt::harness::{
    emit_contour, emit_trace, load_surrogate, run_experiment, table_label, ExperimentConfig, SUMMARY_CSV,
};
use ids_bayesopt::optimizer::TrialLog;
use ids_bayesopt::{Error, Result};

/// Bayesian optimization of intrusion-detection classifiers.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key=value config file.
    Run { config: PathBuf },
    /// Convert a trial log into a convergence trace CSV.
    Trace {
        trials: PathBuf,
        /// Output path [default: trace.csv next to the log]
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write a surrogate contour grid over two parameters of a finished run.
    Contour {
        /// Per-family output directory (holding trials.jsonl, space.json, surrogate.json)
        family_dir: PathBuf,
        param_x: String,
        param_y: String,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        /// Output path [default: contour_<x>_<y>.csv in the family directory]
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic benchmark CSV and its schema.
    Synth {
        #[arg(long, default_value_t = 5000)]
        rows: usize,
        #[arg(long, default_value_t = 14)]
        features: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        anomaly_fraction: f64,
        #[arg(long, default_value_t = 0.3)]
        difficulty: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV path; the schema goes next to it with a `.schema` extension
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(config: &Path) -> Result<bool> {
    let cfg = ExperimentConfig::from_path(config).map_err(|e| match e {
        Error::Io { path, source } => Error::Config(format!("cannot read config {}: {source}", path.display())),
        e => e,
    })?;
    let summary = run_experiment(&cfg)?;
    for tuned in [false, true] {
        for f in &summary.families {
            if let Some(r) = &f.report {
                let m = if tuned { r.tuned } else { r.baseline };
                println!(
                    "{:<12} test acc {:>6.2}%  FAR {:.4}",
                    table_label(f.family, tuned),
                    100.0 * m.test.accuracy,
                    m.test.far.value
                );
            }
        }
    }
    println!("summary written to {}", cfg.output_dir.join(SUMMARY_CSV).display());
    let mut ok = true;
    for f in summary.failures() {
        eprintln!("error: {} failed: {}", f.family, f.error.as_deref().unwrap_or(""));
        ok = false;
    }
    Ok(ok)
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Run { config } => run(&config),
        Command::Trace { trials, out } => {
            let log = TrialLog::read(&trials)?;
            let out = out.unwrap_or_else(|| trials.with_file_name("trace.csv"));
            emit_trace(&log, &out)?;
            println!("{}", out.display());
            Ok(true)
        }
        Command::Contour {
            family_dir,
            param_x,
            param_y,
            resolution,
            out,
        } => {
            let (model, space, log, incumbent) = load_surrogate(&family_dir)?;
            let best = log.best().expect("loaded logs are non-empty");
            let out = out.unwrap_or_else(|| family_dir.join(format!("contour_{param_x}_{param_y}.csv")));
            emit_contour(&model, &space, &param_x, &param_y, resolution, &best.params, incumbent, &out)?;
            println!("{}", out.display());
            Ok(true)
        }
        Command::Synth {
            rows,
            features,
            anomaly_fraction,
            difficulty,
            seed,
            out,
        } => {
            let data = synthesize_benchmark(rows, features, anomaly_fraction, difficulty, seed).map_err(|e| match e {
                Error::Precondition(m) => Error::Config(m),
                e => e,
            })?;
            write_csv(&data, &out)?;
            let schema_path = out.with_extension("schema");
            std::fs::write(&schema_path, Schema::numeric(features).to_text())
                .map_err(|e| Error::io(&schema_path, e))?;
            println!("{}\n{}", out.display(), schema_path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
