use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::space::Assignment;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// 1-based evaluation number.
    pub index: usize,
    pub params: Assignment,
    pub objective: f64,
    pub best_so_far: f64,
    /// Seconds since the start of the run when this evaluation finished.
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialLog {
    trials: Vec<Trial>,
}

impl TrialLog {
    pub fn new() -> Self {
        TrialLog::default()
    }

    /// Appends an evaluation, filling in its index and running minimum.
    pub fn record(&mut self, params: Assignment, objective: f64, elapsed_seconds: f64) -> &Trial {
        let best_so_far = self.trials.last().map_or(objective, |t| t.best_so_far.min(objective));
        self.trials.push(Trial {
            index: self.trials.len() + 1,
            params,
            objective,
            best_so_far,
            elapsed_seconds,
        });
        self.trials.last().expect("just pushed")
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Lowest objective, first occurrence on ties.
    pub fn best(&self) -> Option<&Trial> {
        self.trials
            .iter()
            .fold(None, |acc: Option<&Trial>, t| match acc {
                Some(b) if b.objective <= t.objective => Some(b),
                _ => Some(t),
            })
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.trials {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses JSON lines, skipping blank ones, and checks the bookkeeping.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut trials = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let t: Trial = serde_json::from_str(line).map_err(|e| Error::Row {
                row: i + 1,
                message: e.to_string(),
            })?;
            trials.push(t);
        }
        for (i, t) in trials.iter().enumerate() {
            if t.index != i + 1 {
                return Err(Error::Row {
                    row: i + 1,
                    message: format!("expected trial index {}, found {}", i + 1, t.index),
                });
            }
        }
        Ok(TrialLog { trials })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrialLog::from_jsonl(&text)
    }
}
