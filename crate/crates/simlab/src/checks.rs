//! The oracle suite: each fast component is compared against an independent
//! slow or exact computation.

use cpc_core::classifiers::mlp::{loss, loss_and_grad, MlpParams};
use cpc_core::design::Design;
use cpc_core::oracle::{central_difference, rank_sum_count, relative_error, variance_naive};
use cpc_core::ranks::{rank_sum_r, tie_break_uniforms, variance_hat, ScoredEvaluation};
use cpc_core::rng::{derive_seed, rng_from_seed};
use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::tv::{two_point_examples, tv_fuzz};

pub const VARIANCE_TOL: f64 = 1e-15;
pub const GRADIENT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckSizes {
    pub tv_pairs: usize,
    pub merge_instances: usize,
    pub variance_instances: usize,
    pub gradient_points: usize,
}

impl CheckSizes {
    pub const FULL: CheckSizes = CheckSizes {
        tv_pairs: 1000,
        merge_instances: 10_000,
        variance_instances: 1000,
        gradient_points: 100,
    };
    pub const FAST: CheckSizes = CheckSizes {
        tv_pairs: 200,
        merge_instances: 1000,
        variance_instances: 200,
        gradient_points: 20,
    };
}

/// Scores for instance `k`: even instances are continuous, odd ones live on
/// an 8-point grid so that ties are common.
fn fuzz_scores(k: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(derive_seed(&[seed, k as u64]));
    let n2 = rng.random_range(3..=200);
    let mut draw = || {
        if k % 2 == 0 {
            rng.random::<f64>()
        } else {
            rng.random_range(1..8) as f64 / 8.0
        }
    };
    let a = (0..n2).map(|_| draw()).collect();
    let b = (0..n2).map(|_| draw()).collect();
    (a, b)
}

/// Instances where the merge count differs from the double loop.
pub fn merge_mismatches(instances: usize, seed: u64) -> usize {
    (0..instances)
        .filter(|&k| {
            let (a, b) = fuzz_scores(k, seed);
            let e = ScoredEvaluation::new(a.clone(), b.clone()).expect("finite scores");
            let tie_seed = derive_seed(&[seed, k as u64, 1]);
            let (z, h) = tie_break_uniforms(a.len(), tie_seed);
            rank_sum_r(&e, tie_seed).expect("valid").count != rank_sum_count(&a, &b, &z, &h)
        })
        .count()
}

/// Largest absolute gap between the projection form and the literal formula.
pub fn variance_max_gap(instances: usize, seed: u64) -> f64 {
    (0..instances)
        .map(|k| {
            let (a, b) = fuzz_scores(k, seed);
            let e = ScoredEvaluation::new(a.clone(), b.clone()).expect("finite scores");
            (variance_hat(&e).expect("valid").raw - variance_naive(&a, &b)).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest relative error between the analytic full-batch gradient of a
/// 2-1-1 network (5 parameters) and central differences.
pub fn gradient_max_error(points: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let x = Array2::from_shape_fn((16, 2), |_| rng.random_range(-2.0..2.0));
    let y: Vec<f64> = (0..16).map(|i| (i % 2) as f64).collect();
    let design = Design::Dense(x);
    (0..points)
        .map(|_| {
            let flat: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = MlpParams::from_flat(2, 1, &flat).expect("five parameters");
            let (_, g) = loss_and_grad(&p, &design, &y, 1e-3);
            let fd = central_difference(
                |v| loss(&MlpParams::from_flat(2, 1, v).expect("five parameters"), &design, &y, 1e-3),
                &flat,
                1e-6,
            );
            relative_error(&g, &fd, 1e-8)
        })
        .fold(0.0, f64::max)
}

pub fn run_checks(sizes: CheckSizes, seed: u64) -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    let fuzz = tv_fuzz(sizes.tv_pairs, 8, derive_seed(&[seed, 1]));
    let examples = two_point_examples();
    let ex_ok = examples.iter().all(|(_, b)| b.pass);
    out.push(CheckOutcome {
        name: "tv_sandwich".into(),
        passed: fuzz.failures == 0 && ex_ok,
        detail: format!(
            "{} fuzzed pairs, {} failures, worst margin {:.3e}; two-point examples {}",
            fuzz.checked,
            fuzz.failures,
            fuzz.worst_margin,
            if ex_ok { "pass" } else { "FAIL" }
        ),
    });

    let mism = merge_mismatches(sizes.merge_instances, derive_seed(&[seed, 2]));
    out.push(CheckOutcome {
        name: "rank_sum_merge".into(),
        passed: mism == 0,
        detail: format!("{} instances, {} mismatches", sizes.merge_instances, mism),
    });

    let gap = variance_max_gap(sizes.variance_instances, derive_seed(&[seed, 3]));
    out.push(CheckOutcome {
        name: "variance_formula".into(),
        passed: gap <= VARIANCE_TOL,
        detail: format!("{} instances, max gap {gap:.3e}", sizes.variance_instances),
    });

    let err = gradient_max_error(sizes.gradient_points, derive_seed(&[seed, 4]));
    out.push(CheckOutcome {
        name: "mlp_gradient".into(),
        passed: err < GRADIENT_TOL,
        detail: format!("{} points, max relative error {err:.3e}", sizes.gradient_points),
    });

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let r = run_checks(CheckSizes::FAST, 42);
        assert_eq!(r.len(), 4);
        for c in &r {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn fuzz_covers_ties() {
        let (a, b) = fuzz_scores(1, 0);
        let mut all: Vec<f64> = a.into_iter().chain(b).collect();
        let len = all.len();
        all.sort_by(f64::total_cmp);
        all.dedup();
        assert!(all.len() < len);
    }
}
