//! Derivative-free maximization over box-bounded parameters: Nelder–Mead
//! with seeded random restarts. Deterministic for a fixed seed, bounds, and
//! restart count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Simplex collapses below this objective spread stop a restart.
pub const SIMPLEX_TOL: f64 = 1e-10;
/// Objective evaluation budget per restart.
pub const MAX_EVALS_PER_RESTART: u64 = 10_000;

/// Outcome of a restarted maximization run.
#[derive(Clone, Debug)]
pub struct OptimizationReport {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub evaluations: u64,
    pub restarts: usize,
}

fn clip(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in x.iter_mut().zip(bounds.iter()) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Maximizes `f` over the box `bounds` with `restarts` independent
/// Nelder–Mead runs from seeded random starting points. Non-finite objective
/// values are treated as −∞. The reported best value is re-evaluated from
/// the reported parameters.
pub fn maximize(
    f: &mut dyn FnMut(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    restarts: usize,
    seed: u64,
) -> OptimizationReport {
    assert!(!bounds.is_empty(), "maximization needs at least one parameter");
    assert!(
        bounds.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo <= hi),
        "bounds must be finite and ordered"
    );
    let mut evaluations: u64 = 0;
    // Internally minimize −f; non-finite values become +∞ (never selected).
    let mut cost = |x: &[f64]| -> f64 {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };

    let mut best_params: Option<Vec<f64>> = None;
    let mut best_cost = f64::INFINITY;
    for r in 0..restarts.max(1) {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add((r as u64).wrapping_mul(0x9E3779B97F4A7C15)));
        let start: Vec<f64> = bounds
            .iter()
            .map(|(lo, hi)| if lo < hi { rng.gen_range(*lo..*hi) } else { *lo })
            .collect();
        let (params, value) = nelder_mead(&mut cost, &start, bounds);
        if value < best_cost {
            best_cost = value;
            best_params = Some(params);
        }
    }

    let best_params = best_params.expect("at least one restart ran");
    let final_cost = cost(&best_params);
    OptimizationReport {
        best_value: if final_cost.is_finite() { -final_cost } else { f64::NEG_INFINITY },
        best_params,
        evaluations,
        restarts: restarts.max(1),
    }
}

/// One bounded Nelder–Mead descent (standard reflection/expansion/
/// contraction/shrink coefficients); candidates are clipped into the bounds
/// before evaluation.
fn nelder_mead(
    cost: &mut impl FnMut(&[f64]) -> f64,
    start: &[f64],
    bounds: &[(f64, f64)],
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut evals_here: u64 = 0;
    let mut eval = |x: &mut Vec<f64>, budget_left: &mut bool| -> f64 {
        clip(x, bounds);
        evals_here += 1;
        if evals_here >= MAX_EVALS_PER_RESTART {
            *budget_left = false;
        }
        cost(x)
    };
    let mut budget = true;

    // Initial simplex: start plus one step along each axis (10% of range).
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut s0 = start.to_vec();
    let f0 = eval(&mut s0, &mut budget);
    simplex.push((s0, f0));
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let step = if hi > lo { 0.1 * (hi - lo) } else { 0.1 };
        let mut p = start.to_vec();
        p[i] = if p[i] + step <= hi { p[i] + step } else { p[i] - step };
        let fp = eval(&mut p, &mut budget);
        simplex.push((p, fp));
    }

    while budget {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite or +inf costs"));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < SIMPLEX_TOL {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(p, _)| p[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let mut reflected: Vec<f64> =
            (0..n).map(|j| 2.0 * centroid[j] - worst.0[j]).collect();
        let fr = eval(&mut reflected, &mut budget);
        if fr < simplex[0].1 {
            let mut expanded: Vec<f64> =
                (0..n).map(|j| centroid[j] + 2.0 * (reflected[j] - centroid[j])).collect();
            let fe = eval(&mut expanded, &mut budget);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let toward = if fr < worst.1 { &reflected } else { &worst.0 };
            let mut contracted: Vec<f64> =
                (0..n).map(|j| centroid[j] + 0.5 * (toward[j] - centroid[j])).collect();
            let fc = eval(&mut contracted, &mut budget);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(best.iter())
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    let fp = eval(&mut p, &mut budget);
                    *entry = (p, fp);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite or +inf costs"));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_maximum() {
        let mut f = |x: &[f64]| -((x[0] - 0.3).powi(2)) - (x[1] + 0.2).powi(2);
        let report = maximize(&mut f, &[(-1.0, 1.0), (-1.0, 1.0)], 5, 42);
        assert!((report.best_params[0] - 0.3).abs() < 1e-5);
        assert!((report.best_params[1] + 0.2).abs() < 1e-5);
        assert!(report.best_value.abs() < 1e-9);
        assert!(report.evaluations > 0);
    }

    #[test]
    fn restarts_escape_local_maxima() {
        let mut f = |x: &[f64]| {
            (-50.0 * (x[0] - 0.7).powi(2)).exp() + 0.5 * (-50.0 * (x[0] + 0.7).powi(2)).exp()
        };
        let report = maximize(&mut f, &[(-1.0, 1.0)], 30, 7);
        assert!((report.best_params[0] - 0.7).abs() < 1e-4);
        assert!((report.best_value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_bounds() {
        let mut f = |x: &[f64]| x[0];
        let report = maximize(&mut f, &[(0.0, 1.0)], 3, 1);
        assert!((report.best_value - 1.0).abs() < 1e-9);
        assert!(report.best_params[0] <= 1.0);
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let run = || {
            let mut f =
                |x: &[f64]| -(x[0].powi(2)) + (3.0 * x[1]).sin() * 0.1 - (x[1] - 0.4).powi(4);
            maximize(&mut f, &[(-2.0, 2.0), (-2.0, 2.0)], 8, 123)
        };
        let a = run();
        let b = run();
        assert_eq!(a.best_params, b.best_params);
        assert_eq!(a.best_value, b.best_value);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn nonfinite_objectives_are_rejected() {
        let mut f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                1.0 - x[0]
            }
        };
        let report = maximize(&mut f, &[(-1.0, 1.0)], 10, 9);
        assert!((report.best_value - 1.0).abs() < 1e-6);
        assert!(report.best_params[0] >= 0.0);
    }
}
