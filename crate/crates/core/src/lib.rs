//! Independence testing by classification on cyclically permuted samples.
//!
//! The sample is split in two. On the first half a classifier learns to tell
//! the observed pairs `(x_i, y_i)` from the cyclic shift `(x_i, y_{i+1})`.
//! On the second half the scores of observed and shifted pairs are compared
//! with a rank-sum statistic whose null distribution is asymptotically normal
//! regardless of the classifier, giving a p-value without permutations.

pub mod baselines;
pub mod classifiers;
pub mod cpc;
pub mod data;
pub mod design;
pub mod error;
pub mod oracle;
pub mod ranks;
pub mod rng;
pub mod split;

pub use baselines::{dcor_test, distance_correlation, permutation_pvalue, DcorReport, DcorResult};
pub use classifiers::{predict_scores, ClassifierConfig, FittedModel, ScoreModel};
pub use cpc::{cpc_run, cpc_test, cpc_test_rows, CpcConfig, TestReport};
pub use data::{
    load_paired_csv, load_sparse_market, standardize, PairedRows, PairedSample, SparseColumnMatrix,
    SparsePairedSample, StandardizationStats,
};
pub use error::{Error, ErrorCategory, Result};
pub use ranks::{ecdf, kl_statistic, rank_sum_r, t_statistic, variance_hat, Ecdf, ScoredEvaluation};
pub use split::{build_training_sets, cyclic_permute, split_indices, SplitPlan};
