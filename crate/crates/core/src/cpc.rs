//! The end-to-end test: split, permute, classify, rank, standardize.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::classifiers::{predict_scores, ClassifierConfig, FittedModel, ScoreModel, SCORE_EPS};
use crate::data::{standardize, PairedRows, PairedSample};
use crate::error::Result;
use crate::ranks::{kl_statistic, rank_sum_r, t_statistic, variance_hat, ScoredEvaluation};
use crate::rng::{derive_seed, stream};
use crate::split::{build_evaluation_table, build_training_sets, split_indices, EvaluationTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpcConfig {
    pub classifier: ClassifierConfig,
    /// Standardize columns before splitting (dense inputs only).
    pub standardize: bool,
}

impl Default for CpcConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierConfig::mlp(),
            standardize: true,
        }
    }
}

impl CpcConfig {
    pub fn new(classifier: ClassifierConfig) -> Self {
        Self {
            classifier,
            standardize: true,
        }
    }

    pub fn with_standardize(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub kind: String,
    pub converged: bool,
    /// Number of nonzero penalized coefficients, where meaningful.
    pub nonzero: Option<usize>,
    pub objective: Option<f64>,
}

impl FitSummary {
    fn of(model: &FittedModel) -> Self {
        let (nonzero, objective) = match model {
            FittedModel::Logistic(m) => (Some(m.weights.len() - 1 - m.n_zero_weights()), Some(m.objective)),
            FittedModel::Mlp(m) => (
                Some(m.params.w1.iter().filter(|w| **w != 0.0).count()),
                Some(m.final_loss),
            ),
            FittedModel::Quadratic(m) => (Some(m.nnz()), None),
        };
        Self {
            kind: model.kind().to_string(),
            converged: model.converged(),
            nonzero,
            objective,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: String,
    #[serde(rename = "R")]
    pub r: f64,
    pub sigma_hat_sq: f64,
    pub sigma_hat_sq_raw: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub tie_count: u64,
    pub variance_floored: bool,
    pub seed: u64,
    pub split_seed: u64,
    pub fit_seed: u64,
    pub tie_seed: u64,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub d1: usize,
    pub d2: usize,
    pub standardized: bool,
    pub score_eps: f64,
    pub t_statistic: f64,
    pub kl_statistic: f64,
    pub classifier: ClassifierConfig,
    pub fit: FitSummary,
    pub warnings: Vec<String>,
}

/// `(√n2 (R − ½) / σ̂, Φ(statistic))`.
pub fn standardized_statistic(r: f64, sigma_sq: f64, n2: usize) -> (f64, f64) {
    let stat = (n2 as f64).sqrt() * (r - 0.5) / sigma_sq.sqrt();
    (stat, normal_cdf(stat))
}

pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Scores of a fitted model on an evaluation table.
pub fn score_evaluation<M: ScoreModel + ?Sized>(model: &M, eval: &EvaluationTable) -> Result<ScoredEvaluation> {
    ScoredEvaluation::new(predict_scores(model, &eval.joint)?, predict_scores(model, &eval.prod)?)
}

/// Scores a fixed model on the cyclic evaluation pairs over `indices`.
pub fn score_indices<M: ScoreModel + ?Sized, P: PairedRows + ?Sized>(
    model: &M,
    sample: &P,
    indices: &[usize],
) -> Result<ScoredEvaluation> {
    score_evaluation(model, &build_evaluation_table(sample, indices)?)
}

/// Everything the test computes, before packaging.
pub struct CpcRun {
    pub model: FittedModel,
    pub scores: ScoredEvaluation,
    pub report: TestReport,
}

/// Runs the pipeline on any row source without preprocessing.
pub fn cpc_run<P: PairedRows + ?Sized>(sample: &P, classifier: &ClassifierConfig, seed: u64) -> Result<CpcRun> {
    let split_seed = derive_seed(&[seed, stream::SPLIT]);
    let fit_seed = derive_seed(&[seed, stream::FIT]);
    let tie_seed = derive_seed(&[seed, stream::TIES]);

    let plan = split_indices(sample.n(), split_seed)?;
    let (train, eval) = build_training_sets(sample, &plan)?;
    let resolved = classifier.resolved(sample.d1(), sample.d2());
    let model = resolved.fit(&train, sample.d1(), fit_seed)?;
    let scores = score_evaluation(&model, &eval)?;

    let rank = rank_sum_r(&scores, tie_seed)?;
    let var = variance_hat(&scores)?;
    let (statistic, p_value) = standardized_statistic(rank.r, var.value, scores.n2());

    let mut warnings = Vec::new();
    if var.floored {
        warnings.push(format!(
            "variance estimate {:.3e} below floor; using {:.0e}",
            var.raw, var.value
        ));
    }
    if !model.converged() {
        warnings.push("classifier did not converge within its iteration budget".into());
    }
    let first = scores.s_joint()[0];
    if scores.s_joint().iter().chain(scores.s_prod()).all(|&s| s == first) {
        warnings.push("classifier scores are constant; ranks decided by tie-breaking".into());
    }

    let report = TestReport {
        method: "cpc".into(),
        r: rank.r,
        sigma_hat_sq: var.value,
        sigma_hat_sq_raw: var.raw,
        statistic,
        p_value,
        tie_count: rank.tie_pairs,
        variance_floored: var.floored,
        seed,
        split_seed,
        fit_seed,
        tie_seed,
        n: sample.n(),
        n1: plan.i1.len(),
        n2: plan.i2.len(),
        d1: sample.d1(),
        d2: sample.d2(),
        standardized: false,
        score_eps: SCORE_EPS,
        t_statistic: t_statistic(&scores),
        kl_statistic: kl_statistic(&scores)?,
        classifier: resolved,
        fit: FitSummary::of(&model),
        warnings,
    };
    Ok(CpcRun { model, scores, report })
}

/// The test on a dense sample, standardizing first if configured.
pub fn cpc_test(sample: &PairedSample, config: &CpcConfig, seed: u64) -> Result<TestReport> {
    if config.standardize {
        let (std_sample, stats) = standardize(sample);
        let mut report = cpc_run(&std_sample, &config.classifier, seed)?.report;
        report.standardized = true;
        let constant = stats.constant_x_columns().len() + stats.constant_y_columns().len();
        if constant > 0 {
            report
                .warnings
                .push(format!("{constant} constant column(s) left unscaled"));
        }
        Ok(report)
    } else {
        Ok(cpc_run(sample, &config.classifier, seed)?.report)
    }
}

/// The test on a sparse or otherwise generic row source; never standardizes.
pub fn cpc_test_rows<P: PairedRows + ?Sized>(sample: &P, classifier: &ClassifierConfig, seed: u64) -> Result<TestReport> {
    Ok(cpc_run(sample, classifier, seed)?.report)
}
