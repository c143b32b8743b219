//! CSV artifacts for plotting: convergence traces and surrogate contour grids.

use std::path::Path;

use crate::optimizer::{
    encode_point, expected_improvement, Assignment, ParamKind, ParamSpec, ParamValue, SearchSpace, TrialLog,
};
use crate::surrogate::GpModel;
use crate::{Error, Result};

pub(super) fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })
}

pub(super) fn flush(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `eval_index, objective, best_so_far`, one row per trial.
pub fn emit_trace(log: &TrialLog, path: &Path) -> Result<()> {
    if log.is_empty() {
        return Err(Error::Empty(format!("trial log for {}", path.display())));
    }
    let mut w = writer(path)?;
    w.write_record(["eval_index", "objective", "best_so_far"])?;
    for t in log.trials() {
        w.write_record([t.index.to_string(), t.objective.to_string(), t.best_so_far.to_string()])?;
    }
    flush(w, path)
}

/// Axis samples for one parameter: the value to substitute and the label
/// written to the grid (log10 for log-scaled parameters).
fn axis(spec: &ParamSpec, resolution: usize) -> Vec<(ParamValue, String)> {
    let unit = |i: usize| i as f64 / (resolution - 1) as f64;
    match &spec.kind {
        ParamKind::Continuous { lo, hi, log_scale } => (0..resolution)
            .map(|i| {
                let u = unit(i);
                if *log_scale {
                    let e = lo.log10() + u * (hi.log10() - lo.log10());
                    (ParamValue::Real(10f64.powf(e).clamp(*lo, *hi)), e.to_string())
                } else {
                    let v = lo + u * (hi - lo);
                    (ParamValue::Real(v), v.to_string())
                }
            })
            .collect(),
        ParamKind::Integer { lo, hi } => (0..resolution)
            .map(|i| {
                let v = ((*lo as f64 + unit(i) * (hi - lo) as f64 + 0.5).floor() as i64).clamp(*lo, *hi);
                (ParamValue::Int(v), v.to_string())
            })
            .collect(),
        ParamKind::Categorical { levels } => levels
            .iter()
            .map(|l| (ParamValue::Level(l.clone()), l.clone()))
            .collect(),
    }
}

/// Surrogate grid over two parameters with every other parameter held at
/// `base` (normally the best trial). Writes `x, y, posterior_mean,
/// posterior_sd, expected_improvement`; `incumbent` is the EI reference.
///
/// Continuous and integer axes get `resolution` points each, categorical axes
/// one point per level.
#[allow(clippy::too_many_arguments)]
pub fn emit_contour(
    model: &GpModel,
    space: &SearchSpace,
    param_x: &str,
    param_y: &str,
    resolution: usize,
    base: &Assignment,
    incumbent: f64,
    path: &Path,
) -> Result<()> {
    if resolution < 2 {
        return Err(Error::Config(format!("contour resolution must be at least 2, got {resolution}")));
    }
    if param_x == param_y {
        return Err(Error::Config(format!("contour axes must differ, got `{param_x}` twice")));
    }
    let spec = |name: &str| space.param(name).ok_or_else(|| Error::UnknownParam(name.to_string()));
    let (sx, sy) = (spec(param_x)?, spec(param_y)?);
    let base = space.canonical(base)?;

    let mut w = writer(path)?;
    w.write_record(["x", "y", "posterior_mean", "posterior_sd", "expected_improvement"])?;
    let xs = axis(sx, resolution);
    let ys = axis(sy, resolution);
    for (vy, ly) in &ys {
        for (vx, lx) in &xs {
            let mut a = base.clone();
            a.set(param_x, vx.clone());
            a.set(param_y, vy.clone());
            let post = model.posterior(&encode_point(space, &a)?)?;
            let ei = expected_improvement(post, incumbent);
            w.write_record([
                lx.clone(),
                ly.clone(),
                post.mean.to_string(),
                post.sd.to_string(),
                ei.to_string(),
            ])?;
        }
    }
    flush(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{bo_minimize, fit_surrogate, BoOptions, FnObjective};

    fn read_rows(path: &Path) -> Vec<Vec<String>> {
        csv::Reader::from_path(path)
            .unwrap()
            .records()
            .map(|r| r.unwrap().iter().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn trace_rows_and_empty_log() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        assert!(emit_trace(&TrialLog::new(), &path).is_err());
        let mut log = TrialLog::new();
        for (i, j) in [0.4, 0.6, 0.1].into_iter().enumerate() {
            log.record(Assignment(vec![("x".into(), ParamValue::Int(i as i64))]), j, 0.0);
        }
        emit_trace(&log, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "eval_index,objective,best_so_far\n1,0.4,0.4\n2,0.6,0.4\n3,0.1,0.1\n");
    }

    #[test]
    fn contour_grid_shape_and_interpolation() {
        let space = SearchSpace::new(vec![
            ParamSpec::continuous("c", 1e-2, 1e2, true),
            ParamSpec::continuous("g", 0.0, 1.0, false),
            ParamSpec::categorical("m", &["a", "b"]),
        ])
        .unwrap();
        let f = FnObjective(|a: &Assignment| {
            let c = a.get("c").unwrap().as_f64().unwrap().log10();
            let g = a.get("g").unwrap().as_f64().unwrap();
            0.1 * c * c + (g - 0.3).powi(2)
        });
        let log = bo_minimize(&f, &space, &BoOptions::new(12, 4, 3)).unwrap();
        let (model, incumbent) = fit_surrogate(&space, &log, Default::default(), 1).unwrap();
        let best = log.best().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contour.csv");

        emit_contour(&model, &space, "c", "g", 7, &best.params, incumbent, &path).unwrap();
        let rows = read_rows(&path);
        assert_eq!(rows.len(), 49);
        assert_eq!(rows[0][0], "-2");
        assert_eq!(rows[6][0], "2");
        let max_sd = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).fold(0.0, f64::max);
        let min_mean = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
        assert!(min_mean <= best.best_so_far + 2.0 * max_sd);

        // the best trial itself sits on the surrogate's data
        let at_best = model.posterior(&encode_point(&space, &best.params).unwrap()).unwrap();
        assert!(at_best.sd <= model.kernel().noise_variance.sqrt() + 1e-6);

        emit_contour(&model, &space, "m", "g", 5, &best.params, incumbent, &path).unwrap();
        assert_eq!(read_rows(&path).len(), 10);
        assert!(emit_contour(&model, &space, "c", "zz", 5, &best.params, incumbent, &path).is_err());
        assert!(emit_contour(&model, &space, "c", "g", 1, &best.params, incumbent, &path).is_err());
    }
}
