//! Rejection-rate experiments over a grid of models and signal strengths.

use std::fmt;
use std::str::FromStr;

use cpc_core::baselines::dcor_test;
use cpc_core::rng::derive_seed;
use cpc_core::{cpc_test, ClassifierConfig, CpcConfig, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{generate, Covariance, ModelId, SimModel, Tails};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cpc,
    Dcor,
}

impl Method {
    fn tag(self) -> u64 {
        match self {
            Method::Cpc => 1,
            Method::Dcor => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cpc => "cpc",
            Method::Dcor => "dcor",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cpc" => Ok(Method::Cpc),
            "dcor" | "dc" => Ok(Method::Dcor),
            other => Err(Error::Config(format!("unknown method '{other}' (expected cpc or dcor)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub models: Vec<ModelId>,
    pub a_grid: Vec<f64>,
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub covariance: Covariance,
    pub tails: Tails,
    pub classifier: ClassifierConfig,
    pub standardize: bool,
    pub permutations: usize,
    pub jobs: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            models: vec![ModelId::M1],
            a_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            n: 1000,
            d1: 100,
            d2: 100,
            alphas: vec![0.05],
            reps: 500,
            methods: vec![Method::Cpc],
            master_seed: 42,
            covariance: Covariance::Identity,
            tails: Tails::Gaussian,
            classifier: ClassifierConfig::mlp(),
            standardize: false,
            permutations: cpc_core::baselines::DEFAULT_PERMUTATIONS,
            jobs: 1,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Config("every alpha must lie in (0, 1)".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        Ok(())
    }

    fn model(&self, id: ModelId, a: f64) -> SimModel {
        SimModel {
            id,
            a,
            d1: self.d1,
            d2: self.d2,
            covariance: self.covariance,
            tails: self.tails,
        }
    }
}

/// Data seed for one replicate of one grid cell.
pub fn replicate_seed(master: u64, model: ModelId, a_index: usize, rep: usize) -> u64 {
    derive_seed(&[master, model.index(), a_index as u64, rep as u64])
}

/// One method applied to one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub model: ModelId,
    pub a: f64,
    pub method: Method,
    pub rep: usize,
    pub seed: u64,
    pub p_value: Option<f64>,
    pub statistic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub model: ModelId,
    pub a: f64,
    pub method: Method,
    pub alpha: f64,
    pub rejection_rate: f64,
    pub mc_se: f64,
    /// Replicates that produced a p-value.
    pub reps: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub cells: Vec<PowerCell>,
}

pub struct PowerOutcome {
    pub records: Vec<RepRecord>,
    pub curve: PowerCurve,
    pub seeds: Vec<u64>,
}

/// Monte Carlo standard error of a rejection fraction.
pub fn mc_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

fn run_method(method: Method, cfg: &PowerConfig, sample: &cpc_core::PairedSample, seed: u64) -> Result<(f64, f64)> {
    match method {
        Method::Cpc => {
            let c = CpcConfig {
                classifier: cfg.classifier.clone(),
                standardize: cfg.standardize,
            };
            let r = cpc_test(sample, &c, seed)?;
            Ok((r.p_value, r.statistic))
        }
        Method::Dcor => {
            let r = dcor_test(sample.x(), sample.y(), cfg.permutations, seed)?;
            Ok((r.p_value.expect("permutation test"), r.dcor))
        }
    }
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

pub fn power_experiment(cfg: &PowerConfig) -> Result<PowerOutcome> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &model in &cfg.models {
        for (ai, &a) in cfg.a_grid.iter().enumerate() {
            for rep in 0..cfg.reps {
                jobs.push((model, ai, a, rep));
            }
        }
    }
    let pool = thread_pool(cfg.jobs)?;
    let per_job: Vec<Vec<RepRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(model, ai, a, rep)| {
                let seed = replicate_seed(cfg.master_seed, model, ai, rep);
                let data = generate(&cfg.model(model, a), cfg.n, seed);
                cfg.methods
                    .iter()
                    .map(|&method| {
                        let outcome = data
                            .as_ref()
                            .map_err(|e| e.to_string())
                            .and_then(|s| {
                                run_method(method, cfg, s, derive_seed(&[seed, method.tag()])).map_err(|e| e.to_string())
                            });
                        let (p_value, statistic, error) = match outcome {
                            Ok((p, s)) => (Some(p), Some(s), None),
                            Err(e) => (None, None, Some(e)),
                        };
                        RepRecord {
                            model,
                            a,
                            method,
                            rep,
                            seed,
                            p_value,
                            statistic,
                            error,
                        }
                    })
                    .collect()
            })
            .collect()
    });
    let records: Vec<RepRecord> = per_job.into_iter().flatten().collect();
    let mut seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
    seeds.dedup();
    let curve = aggregate(cfg, &records);
    Ok(PowerOutcome { records, curve, seeds })
}

fn aggregate(cfg: &PowerConfig, records: &[RepRecord]) -> PowerCurve {
    let mut cells = Vec::new();
    for &model in &cfg.models {
        for &a in &cfg.a_grid {
            for &method in &cfg.methods {
                let ps: Vec<f64> = records
                    .iter()
                    .filter(|r| r.model == model && r.a == a && r.method == method)
                    .filter_map(|r| r.p_value)
                    .collect();
                let failed = cfg.reps - ps.len();
                for &alpha in &cfg.alphas {
                    let rate = if ps.is_empty() {
                        f64::NAN
                    } else {
                        ps.iter().filter(|&&p| p <= alpha).count() as f64 / ps.len() as f64
                    };
                    cells.push(PowerCell {
                        model,
                        a,
                        method,
                        alpha,
                        rejection_rate: rate,
                        mc_se: mc_se(rate, ps.len()),
                        reps: ps.len(),
                        failed,
                    });
                }
            }
        }
    }
    PowerCurve { cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PowerConfig {
        PowerConfig {
            a_grid: vec![0.0, 1.0],
            n: 60,
            d1: 2,
            d2: 2,
            reps: 3,
            methods: vec![Method::Cpc, Method::Dcor],
            classifier: ClassifierConfig::logistic(),
            permutations: 19,
            ..Default::default()
        }
    }

    #[test]
    fn single_replicate_rates_are_binary() {
        let mut cfg = small();
        cfg.reps = 1;
        let out = power_experiment(&cfg).unwrap();
        for c in &out.curve.cells {
            assert!(c.rejection_rate == 0.0 || c.rejection_rate == 1.0);
            assert_eq!(c.mc_se, 0.0);
        }
    }

    #[test]
    fn parallel_and_serial_agree() {
        let mut cfg = small();
        let serial = power_experiment(&cfg).unwrap();
        cfg.jobs = 3;
        let parallel = power_experiment(&cfg).unwrap();
        assert_eq!(serial.records, parallel.records);
        assert_eq!(serial.curve, parallel.curve);
    }

    #[test]
    fn replicate_seeds_are_distinct() {
        let out = power_experiment(&small()).unwrap();
        let mut s = out.seeds.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), out.seeds.len());
        assert_eq!(s.len(), 2 * 3);
    }

    #[test]
    fn failures_are_counted_not_fatal() {
        let mut cfg = small();
        cfg.n = 6;
        let out = power_experiment(&cfg).unwrap();
        let cpc: Vec<_> = out.curve.cells.iter().filter(|c| c.method == Method::Cpc).collect();
        assert!(cpc.iter().all(|c| c.failed == 3 && c.reps == 0));
    }

    #[test]
    fn se_formula() {
        assert!((mc_se(0.05, 500) - (0.05f64 * 0.95 / 500.0).sqrt()).abs() < 1e-15);
    }
}
