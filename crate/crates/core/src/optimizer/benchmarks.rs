//! Analytic test functions with known minima.

use std::f64::consts::PI;

use super::space::{Assignment, ParamSpec, SearchSpace};

/// Global minimum of [`branin`].
pub const BRANIN_MIN: f64 = 0.397_887_357_729_738;

/// Branin-Hoo on `x1 in [-5, 10]`, `x2 in [0, 15]`.
pub fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

pub fn branin_space() -> SearchSpace {
    SearchSpace::new(vec![
        ParamSpec::continuous("x1", -5.0, 10.0, false),
        ParamSpec::continuous("x2", 0.0, 15.0, false),
    ])
    .expect("static space")
}

/// Branin evaluated on an assignment from [`branin_space`].
pub fn branin_objective(a: &Assignment) -> f64 {
    let get = |n: &str| a.get(n).and_then(|v| v.as_f64()).expect("branin parameter");
    branin(get("x1"), get("x2"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_minimizers() {
        for (x1, x2) in [(-PI, 12.275), (PI, 2.275), (9.42478, 2.475)] {
            assert!((branin(x1, x2) - BRANIN_MIN).abs() < 1e-5);
        }
    }

    #[test]
    fn dense_grid_agrees_with_minimum() {
        let n = 1500;
        let mut lowest = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let x1 = -5.0 + 15.0 * i as f64 / n as f64;
                let x2 = 15.0 * j as f64 / n as f64;
                lowest = lowest.min(branin(x1, x2));
            }
        }
        assert!(lowest >= BRANIN_MIN - 1e-12);
        assert!(lowest - BRANIN_MIN < 1e-3, "{lowest}");
    }
}
