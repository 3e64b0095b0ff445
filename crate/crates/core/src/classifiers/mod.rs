//! Estimators of the class probability `θ̂(x, y)` that a pair came from the
//! joint sample rather than its cyclic permutation.

pub mod basis;
pub mod features;
pub mod logistic;
pub mod mlp;
pub mod quadratic;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use basis::{basis_expand, Basis, BasisConfig};
pub use features::FeatureMap;
pub use logistic::{fit_logistic_l1, LinearScoreModel, LogisticOptions};
pub use mlp::{fit_mlp, MlpOptions, MlpParams, MlpScoreModel};
pub use quadratic::{fit_penalized_quadratic, QuadOptions, QuadScoreModel};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::split::LabeledTable;

/// Scores are clamped to `[SCORE_EPS, 1 − SCORE_EPS]`.
pub const SCORE_EPS: f64 = 1e-7;

pub fn clamp_score(p: f64) -> f64 {
    p.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
}

pub trait ScoreModel {
    fn kind(&self) -> &'static str;

    /// Width of a concatenated `(x, y)` row.
    fn input_dim(&self) -> usize;

    /// Unclamped class probabilities, one per row.
    fn probabilities(&self, rows: &Design) -> Result<Vec<f64>>;

    fn score(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let mut row = x.to_vec();
        row.extend_from_slice(y);
        let d = row.len();
        let design = Design::Dense(Array2::from_shape_vec((1, d), row).expect("one row"));
        Ok(predict_scores(self, &design)?[0])
    }
}

impl ScoreModel for LinearScoreModel {
    fn kind(&self) -> &'static str {
        "logistic"
    }

    fn input_dim(&self) -> usize {
        self.d1 + self.d2
    }

    fn probabilities(&self, rows: &Design) -> Result<Vec<f64>> {
        Ok(self.logits(rows).into_iter().map(logistic::sigmoid).collect())
    }
}

impl ScoreModel for MlpScoreModel {
    fn kind(&self) -> &'static str {
        "mlp"
    }

    fn input_dim(&self) -> usize {
        self.params.d_in()
    }

    fn probabilities(&self, rows: &Design) -> Result<Vec<f64>> {
        Ok(self.logits(rows).into_iter().map(logistic::sigmoid).collect())
    }
}

impl ScoreModel for QuadScoreModel {
    fn kind(&self) -> &'static str {
        "quadratic"
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn probabilities(&self, rows: &Design) -> Result<Vec<f64>> {
        self.raw((0..rows.n_rows()).map(|i| rows.dense_row(i)))
    }
}

/// Elementwise clamped scores, in row order.
pub fn predict_scores<M: ScoreModel + ?Sized>(model: &M, rows: &Design) -> Result<Vec<f64>> {
    if rows.n_cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: rows.n_cols(),
        });
    }
    Ok(model.probabilities(rows)?.into_iter().map(clamp_score).collect())
}

/// A fitted model of any kind; serializes with a `"kind"` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Logistic(LinearScoreModel),
    Mlp(MlpScoreModel),
    Quadratic(QuadScoreModel),
}

impl FittedModel {
    fn inner(&self) -> &dyn ScoreModel {
        match self {
            FittedModel::Logistic(m) => m,
            FittedModel::Mlp(m) => m,
            FittedModel::Quadratic(m) => m,
        }
    }

    /// `false` when the solver stopped on its iteration budget.
    pub fn converged(&self) -> bool {
        match self {
            FittedModel::Logistic(m) => m.converged,
            FittedModel::Mlp(_) => true,
            FittedModel::Quadratic(m) => m.converged,
        }
    }
}

impl ScoreModel for FittedModel {
    fn kind(&self) -> &'static str {
        self.inner().kind()
    }

    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn probabilities(&self, rows: &Design) -> Result<Vec<f64>> {
        self.inner().probabilities(rows)
    }
}

/// Classifier choice with every hyperparameter explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierConfig {
    Logistic {
        lambda: f64,
        features: FeatureMap,
        max_iter: usize,
        tol: f64,
    },
    Mlp {
        /// `None` resolves to [`MlpOptions::default_hidden`].
        hidden: Option<usize>,
        l1_penalty: f64,
        dropout_rate: f64,
        epochs: usize,
        batch: usize,
        step: f64,
    },
    Quadratic {
        s1: usize,
        k_n: usize,
        lambda: f64,
        cap: usize,
    },
}

impl ClassifierConfig {
    pub fn logistic() -> Self {
        let o = LogisticOptions::default();
        ClassifierConfig::Logistic {
            lambda: 1e-4,
            features: FeatureMap::CrossProducts,
            max_iter: o.max_iter,
            tol: o.tol,
        }
    }

    pub fn mlp() -> Self {
        let o = MlpOptions::with_defaults(1);
        ClassifierConfig::Mlp {
            hidden: None,
            l1_penalty: o.l1_penalty,
            dropout_rate: o.dropout_rate,
            epochs: o.epochs,
            batch: o.batch,
            step: o.step,
        }
    }

    pub fn quadratic() -> Self {
        ClassifierConfig::Quadratic {
            s1: 2,
            k_n: 3,
            lambda: 1e-3,
            cap: 20_000,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "logistic" => Ok(Self::logistic()),
            "mlp" => Ok(Self::mlp()),
            "quadratic" => Ok(Self::quadratic()),
            other => Err(Error::InvalidParameter(format!(
                "unknown classifier '{other}' (expected logistic, mlp or quadratic)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierConfig::Logistic { .. } => "logistic",
            ClassifierConfig::Mlp { .. } => "mlp",
            ClassifierConfig::Quadratic { .. } => "quadratic",
        }
    }

    /// Materializes data-dependent defaults for inputs of width `d1 + d2`.
    pub fn resolved(&self, d1: usize, d2: usize) -> Self {
        let mut c = self.clone();
        if let ClassifierConfig::Mlp { hidden, .. } = &mut c {
            hidden.get_or_insert(MlpOptions::default_hidden(d1 + d2));
        }
        c
    }

    /// Fits on a training table whose first `d1` columns are `x`.
    pub fn fit(&self, train: &LabeledTable, d1: usize, seed: u64) -> Result<FittedModel> {
        let d2 = train.design.n_cols() - d1;
        match self.resolved(d1, d2) {
            ClassifierConfig::Logistic {
                lambda,
                features,
                max_iter,
                tol,
            } => {
                let fit = fit_logistic_l1(train, d1, features, lambda, LogisticOptions { max_iter, tol })?;
                Ok(FittedModel::Logistic(fit.model))
            }
            ClassifierConfig::Mlp {
                hidden,
                l1_penalty,
                dropout_rate,
                epochs,
                batch,
                step,
            } => {
                let opts = MlpOptions {
                    hidden: hidden.expect("resolved"),
                    l1_penalty,
                    dropout_rate,
                    epochs,
                    batch,
                    step,
                };
                Ok(FittedModel::Mlp(fit_mlp(train, opts, seed)?))
            }
            ClassifierConfig::Quadratic { s1, k_n, lambda, cap } => {
                train.require_two_classes()?;
                let (pos, neg) = split_by_label(train)?;
                let cfg = BasisConfig { s1, k_n, cap };
                Ok(FittedModel::Quadratic(fit_penalized_quadratic(
                    &pos,
                    &neg,
                    cfg,
                    lambda,
                    QuadOptions::default(),
                )?))
            }
        }
    }
}

fn split_by_label(train: &LabeledTable) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = train.design.n_cols();
    let pick = |want: f64| {
        let rows: Vec<f64> = (0..train.n_rows())
            .filter(|&i| train.labels[i] == want)
            .flat_map(|i| train.design.dense_row(i))
            .collect();
        Array2::from_shape_vec((rows.len() / d, d), rows).expect("row-major")
    };
    Ok((pick(1.0), pick(0.0)))
}

/// Convenience for building a dense one-off design from rows.
pub fn design_from_rows(rows: &[Vec<f64>]) -> Result<Design> {
    let Some(first) = rows.first() else {
        return Err(Error::EmptyInput);
    };
    let d = first.len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: r.len(),
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Design::Dense(Array2::from_shape_vec((rows.len(), d), flat).expect("checked widths")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_logistic_scores_half() {
        let m = LinearScoreModel::zeros(1, 2, FeatureMap::CrossProducts);
        let d = Design::Dense(array![[1.0, 2.0, 3.0], [-4.0, 0.0, 9.0]]);
        assert_eq!(predict_scores(&m, &d).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn scores_are_clamped() {
        let mut m = LinearScoreModel::zeros(1, 1, FeatureMap::Identity);
        m.weights = vec![1e3, 0.0, 0.0];
        let d = Design::Dense(array![[5.0, 0.0], [-5.0, 0.0], [0.0, 0.0]]);
        let s = predict_scores(&m, &d).unwrap();
        assert_eq!(s, vec![1.0 - SCORE_EPS, SCORE_EPS, 0.5]);
    }

    #[test]
    fn row_permutation_commutes() {
        let mut m = LinearScoreModel::zeros(1, 1, FeatureMap::CrossProducts);
        m.weights = vec![0.3, -0.2, 0.7, 0.1];
        let rows = vec![vec![0.1, 0.5], vec![-1.0, 2.0], vec![0.4, -0.3]];
        let a = predict_scores(&m, &design_from_rows(&rows).unwrap()).unwrap();
        let perm = [2, 0, 1];
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let b = predict_scores(&m, &design_from_rows(&shuffled).unwrap()).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(b[k], a[i]);
        }
    }

    #[test]
    fn wrong_width_rejected() {
        let m = LinearScoreModel::zeros(1, 1, FeatureMap::Identity);
        let d = Design::Dense(array![[1.0, 2.0, 3.0]]);
        assert!(matches!(
            predict_scores(&m, &d),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn fitted_model_json_has_kind_tag() {
        let m = FittedModel::Logistic(LinearScoreModel::zeros(1, 1, FeatureMap::Identity));
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["kind"], "logistic");
        let back: FittedModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);

        let mlp = FittedModel::Mlp(MlpScoreModel {
            params: MlpParams::init(3, 2, 1),
            options: MlpOptions::with_defaults(3),
            seed: 1,
            final_loss: 0.5,
        });
        let v = serde_json::to_value(&mlp).unwrap();
        assert_eq!(v["kind"], "mlp");
        assert!(v["params"]["w1"].is_array());
        assert_eq!(serde_json::from_value::<FittedModel>(v).unwrap(), mlp);
    }

    #[test]
    fn resolving_fills_hidden_width() {
        let c = ClassifierConfig::mlp().resolved(100, 100);
        assert!(matches!(c, ClassifierConfig::Mlp { hidden: Some(256), .. }));
        let c = ClassifierConfig::mlp().resolved(5, 5);
        assert!(matches!(c, ClassifierConfig::Mlp { hidden: Some(20), .. }));
    }
}
