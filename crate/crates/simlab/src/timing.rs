//! Wall-clock benchmarks. Only growth with `n` is meaningful across machines.

use std::time::Instant;

use cpc_core::baselines::dcor_test;
use cpc_core::ranks::rank_sum_r;
use cpc_core::rng::{derive_seed, rng_from_seed};
use cpc_core::{cpc_run, ClassifierConfig, Error, Result, ScoredEvaluation};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::models::{generate, ModelId, SimModel};
use crate::power::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub n_grid: Vec<usize>,
    pub d_grid: Vec<usize>,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub master_seed: u64,
    pub classifier: ClassifierConfig,
    pub permutations: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![1000, 2000],
            d_grid: vec![100],
            methods: vec![Method::Cpc, Method::Dcor],
            reps: 3,
            master_seed: 42,
            classifier: ClassifierConfig::mlp(),
            permutations: cpc_core::baselines::DEFAULT_PERMUTATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub d: usize,
    pub method: Method,
    pub median_seconds: f64,
    /// CPC only: the rank-sum step alone.
    pub rank_sum_seconds: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}

fn seconds<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

/// Median times on M1 data with `a = 1` and `d1 = d2 = d`, rows ordered by
/// `(n, d, method)` as given in the grids.
pub fn timing_bench(cfg: &TimingConfig) -> Result<Vec<TimingRow>> {
    if cfg.methods.is_empty() {
        return Ok(Vec::new());
    }
    if cfg.n_grid.is_empty() || cfg.d_grid.is_empty() || cfg.reps == 0 {
        return Err(Error::Config("timing needs nonempty n and d grids and reps >= 1".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        for &d in &cfg.d_grid {
            let sample = generate(&SimModel::new(ModelId::M1, 1.0, d, d), n, derive_seed(&[cfg.master_seed, n as u64, d as u64]))?;
            for &method in &cfg.methods {
                let mut total = Vec::with_capacity(cfg.reps);
                let mut ranks = Vec::with_capacity(cfg.reps);
                for rep in 0..cfg.reps {
                    let seed = derive_seed(&[cfg.master_seed, rep as u64]);
                    match method {
                        Method::Cpc => {
                            let (run, t) = seconds(|| cpc_run(&sample, &cfg.classifier, seed));
                            let run = run?;
                            let (_, tr) = seconds(|| rank_sum_r(&run.scores, seed));
                            total.push(t);
                            ranks.push(tr);
                        }
                        Method::Dcor => {
                            let (r, t) = seconds(|| dcor_test(sample.x(), sample.y(), cfg.permutations, seed));
                            r?;
                            total.push(t);
                        }
                    }
                }
                rows.push(TimingRow {
                    n,
                    d,
                    method,
                    median_seconds: median(total),
                    rank_sum_seconds: (!ranks.is_empty()).then(|| median(ranks)),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub small: usize,
    pub large: usize,
    pub small_seconds: f64,
    pub large_seconds: f64,
    pub ratio: f64,
}

impl Scaling {
    fn new(small: usize, large: usize, small_seconds: f64, large_seconds: f64) -> Self {
        Self {
            small,
            large,
            small_seconds,
            large_seconds,
            ratio: large_seconds / small_seconds,
        }
    }
}

fn random_scores(n2: usize, seed: u64) -> Result<ScoredEvaluation> {
    let mut rng = rng_from_seed(seed);
    let a = (0..n2).map(|_| rng.random::<f64>()).collect();
    let b = (0..n2).map(|_| rng.random::<f64>()).collect();
    ScoredEvaluation::new(a, b)
}

/// Median rank-sum time at two evaluation sizes on uniform scores.
pub fn rank_sum_scaling(small: usize, large: usize, reps: usize, seed: u64) -> Result<Scaling> {
    let time = |n2: usize| -> Result<f64> {
        let e = random_scores(n2, derive_seed(&[seed, n2 as u64]))?;
        let mut ts = Vec::with_capacity(reps);
        for rep in 0..reps.max(1) {
            let (r, t) = seconds(|| rank_sum_r(&e, rep as u64));
            r?;
            ts.push(t);
        }
        Ok(median(ts))
    };
    Ok(Scaling::new(small, large, time(small)?, time(large)?))
}

/// Median permutation-test time for distance correlation at two sample sizes.
pub fn dcor_scaling(small: usize, large: usize, d: usize, permutations: usize, reps: usize, seed: u64) -> Result<Scaling> {
    let time = |n: usize| -> Result<f64> {
        let s = generate(&SimModel::new(ModelId::M1, 1.0, d, d), n, derive_seed(&[seed, n as u64]))?;
        let mut ts = Vec::with_capacity(reps);
        for rep in 0..reps.max(1) {
            let (r, t) = seconds(|| dcor_test(s.x(), s.y(), permutations, rep as u64));
            r?;
            ts.push(t);
        }
        Ok(median(ts))
    };
    Ok(Scaling::new(small, large, time(small)?, time(large)?))
}
