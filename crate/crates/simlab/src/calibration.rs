//! Null-distribution diagnostics: calibration of the standardized statistic
//! and validity of the variance estimate for a fixed classifier.

use cpc_core::cpc::{normal_cdf, score_indices};
use cpc_core::ranks::{rank_sum_r, variance_hat};
use cpc_core::rng::derive_seed;
use cpc_core::split::build_training_table;
use cpc_core::{cpc_test, ClassifierConfig, CpcConfig, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::models::{generate, ModelId, SimModel};
use crate::power::thread_pool;

pub const CHI_SQUARE_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    pub reps: usize,
    pub classifier: ClassifierConfig,
    pub master_seed: u64,
    pub standardize: bool,
    pub jobs: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            d1: 2,
            d2: 2,
            reps: 500,
            classifier: ClassifierConfig::logistic(),
            master_seed: 42,
            standardize: false,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub failed: usize,
    pub floored: usize,
    pub ks: f64,
    pub mean: f64,
    pub sd: f64,
    pub chi_square: f64,
    /// Upper 1% point of χ² with `CHI_SQUARE_BINS − 1` degrees of freedom.
    pub chi_square_critical: f64,
    pub rejection_05: f64,
    pub rejection_01: f64,
    pub qq: Vec<QqPoint>,
}

/// Kolmogorov distance between the empirical law of `values` and N(0,1).
pub fn ks_normal(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

/// Pearson statistic of `p` against U(0,1) over `bins` equal cells.
pub fn uniformity_chi_square(p: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &v in p {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let e = p.len() as f64 / bins as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

pub fn chi_square_critical(df: usize, level: f64) -> f64 {
    ChiSquared::new(df as f64).expect("df > 0").inverse_cdf(1.0 - level)
}

fn qq_table(values: &[f64]) -> Vec<QqPoint> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let std = Normal::standard();
    let m = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &e)| QqPoint {
            theoretical: std.inverse_cdf((i as f64 + 0.5) / m),
            empirical: e,
        })
        .collect()
}

pub fn null_calibration(cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    if cfg.reps < 50 {
        return Err(Error::Config(format!("calibration needs reps >= 50, got {}", cfg.reps)));
    }
    let model = SimModel::new(ModelId::M1, 0.0, cfg.d1, cfg.d2);
    let cpc = CpcConfig {
        classifier: cfg.classifier.clone(),
        standardize: cfg.standardize,
    };
    let pool = thread_pool(cfg.jobs.max(1))?;
    let outcomes: Vec<Result<(f64, f64, bool)>> = pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(&[cfg.master_seed, rep as u64]);
                let sample = generate(&model, cfg.n, seed)?;
                let r = cpc_test(&sample, &cpc, derive_seed(&[seed, 1]))?;
                Ok((r.statistic, r.p_value, r.variance_floored))
            })
            .collect()
    });
    let mut statistics = Vec::with_capacity(cfg.reps);
    let mut p_values = Vec::with_capacity(cfg.reps);
    let (mut failed, mut floored) = (0, 0);
    for o in outcomes {
        match o {
            Ok((s, p, f)) => {
                statistics.push(s);
                p_values.push(p);
                floored += f as usize;
            }
            Err(_) => failed += 1,
        }
    }
    if statistics.is_empty() {
        return Err(Error::Config("every calibration replicate failed".into()));
    }
    let m = statistics.len() as f64;
    let mean = statistics.iter().sum::<f64>() / m;
    let sd = (statistics.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let rate = |alpha: f64| p_values.iter().filter(|&&p| p <= alpha).count() as f64 / m;
    Ok(CalibrationResult {
        ks: ks_normal(&statistics),
        mean,
        sd,
        chi_square: uniformity_chi_square(&p_values, CHI_SQUARE_BINS),
        chi_square_critical: chi_square_critical(CHI_SQUARE_BINS - 1, 0.01),
        rejection_05: rate(0.05),
        rejection_01: rate(0.01),
        qq: qq_table(&statistics),
        statistics,
        p_values,
        failed,
        floored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheckConfig {
    /// Rows used once to train the classifier, which is then frozen.
    pub n_train: usize,
    pub n2: usize,
    pub d1: usize,
    pub d2: usize,
    pub reps: usize,
    pub classifier: ClassifierConfig,
    pub master_seed: u64,
}

impl Default for VarianceCheckConfig {
    fn default() -> Self {
        Self {
            n_train: 1000,
            n2: 500,
            d1: 2,
            d2: 2,
            reps: 500,
            classifier: ClassifierConfig::mlp(),
            master_seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    /// Monte Carlo variance of `√n2 (R − ½)` over fresh evaluation samples.
    pub mc_variance: f64,
    pub median_sigma_sq: f64,
    pub ratio: f64,
    pub reps: usize,
}

/// Compares the spread of `√n2 (R − ½)` under independence with the median
/// of the plug-in variance, holding the classifier fixed.
pub fn variance_validity(cfg: &VarianceCheckConfig) -> Result<VarianceCheck> {
    if cfg.reps < 2 {
        return Err(Error::Config("variance check needs reps >= 2".into()));
    }
    let model = SimModel::new(ModelId::M1, 0.0, cfg.d1, cfg.d2);
    let train_sample = generate(&model, cfg.n_train, derive_seed(&[cfg.master_seed, 0]))?;
    let all: Vec<usize> = (0..cfg.n_train).collect();
    let train = build_training_table(&train_sample, &all)?;
    let fitted = cfg
        .classifier
        .resolved(cfg.d1, cfg.d2)
        .fit(&train, cfg.d1, derive_seed(&[cfg.master_seed, 1]))?;

    let idx: Vec<usize> = (0..cfg.n2).collect();
    let root = (cfg.n2 as f64).sqrt();
    let mut centred = Vec::with_capacity(cfg.reps);
    let mut sig = Vec::with_capacity(cfg.reps);
    for rep in 0..cfg.reps {
        let seed = derive_seed(&[cfg.master_seed, 2, rep as u64]);
        let fresh = generate(&model, cfg.n2, seed)?;
        let scores = score_indices(&fitted, &fresh, &idx)?;
        let r = rank_sum_r(&scores, derive_seed(&[seed, 1]))?.r;
        centred.push(root * (r - 0.5));
        sig.push(variance_hat(&scores)?.value);
    }
    let m = centred.len() as f64;
    let mean = centred.iter().sum::<f64>() / m;
    let mc_variance = centred.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    sig.sort_by(f64::total_cmp);
    let median_sigma_sq = if sig.len() % 2 == 1 {
        sig[sig.len() / 2]
    } else {
        0.5 * (sig[sig.len() / 2 - 1] + sig[sig.len() / 2])
    };
    Ok(VarianceCheck {
        mc_variance,
        median_sigma_sq,
        ratio: mc_variance / median_sigma_sq,
        reps: cfg.reps,
    })
}
