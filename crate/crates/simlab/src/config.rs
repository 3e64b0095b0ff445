//! Flat `key = value` experiment files.
//!
//! ```toml
//! experiment = "power"
//! models = ["M1"]
//! a_grid = [0.0, 0.5, 1.0]
//! n = 1000
//! d1 = 10
//! d2 = 10
//! reps = 200
//! methods = ["cpc", "dcor"]
//! classifier = "mlp"
//! epochs = 30
//! ```
//!
//! Keys that an experiment does not use are ignored; unknown keys are errors.

use std::path::Path;

use cpc_core::classifiers::FeatureMap;
use cpc_core::{ClassifierConfig, Error, Result};
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationConfig, VarianceCheckConfig};
use crate::lasso::LassoConfig;
use crate::models::{Covariance, ModelId, Tails};
use crate::mu::MuConfig;
use crate::power::{Method, PowerConfig};
use crate::timing::TimingConfig;

/// Hyperparameters layered over a classifier's defaults. Setting a field
/// that the chosen classifier does not have is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOverrides {
    pub lambda: Option<f64>,
    pub features: Option<FeatureMap>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub hidden: Option<usize>,
    pub l1_penalty: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub step: Option<f64>,
    pub s1: Option<usize>,
    pub k_n: Option<usize>,
    pub cap: Option<usize>,
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ClassifierOverrides {
    fn misplaced(&self, kind: &str) -> Option<&'static str> {
        let o = self;
        let present = [
            ("lambda", o.lambda.is_some(), ["logistic", "quadratic"].as_slice()),
            ("features", o.features.is_some(), &["logistic"]),
            ("max_iter", o.max_iter.is_some(), &["logistic"]),
            ("tol", o.tol.is_some(), &["logistic"]),
            ("hidden", o.hidden.is_some(), &["mlp"]),
            ("l1_penalty", o.l1_penalty.is_some(), &["mlp"]),
            ("dropout_rate", o.dropout_rate.is_some(), &["mlp"]),
            ("epochs", o.epochs.is_some(), &["mlp"]),
            ("batch", o.batch.is_some(), &["mlp"]),
            ("step", o.step.is_some(), &["mlp"]),
            ("s1", o.s1.is_some(), &["quadratic"]),
            ("k_n", o.k_n.is_some(), &["quadratic"]),
            ("cap", o.cap.is_some(), &["quadratic"]),
        ];
        present
            .iter()
            .find(|(_, set, kinds)| *set && !kinds.contains(&kind))
            .map(|(name, _, _)| *name)
    }

    pub fn apply(&self, base: ClassifierConfig) -> Result<ClassifierConfig> {
        if let Some(name) = self.misplaced(base.name()) {
            return Err(Error::Config(format!(
                "option '{name}' does not apply to the {} classifier",
                base.name()
            )));
        }
        let mut c = base;
        match &mut c {
            ClassifierConfig::Logistic {
                lambda,
                features,
                max_iter,
                tol,
            } => {
                set(lambda, self.lambda);
                set(features, self.features);
                set(max_iter, self.max_iter);
                set(tol, self.tol);
            }
            ClassifierConfig::Mlp {
                hidden,
                l1_penalty,
                dropout_rate,
                epochs,
                batch,
                step,
            } => {
                if self.hidden.is_some() {
                    *hidden = self.hidden;
                }
                set(l1_penalty, self.l1_penalty);
                set(dropout_rate, self.dropout_rate);
                set(epochs, self.epochs);
                set(batch, self.batch);
                set(step, self.step);
            }
            ClassifierConfig::Quadratic { s1, k_n, lambda, cap } => {
                set(s1, self.s1);
                set(k_n, self.k_n);
                set(lambda, self.lambda);
                set(cap, self.cap);
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    Power(PowerConfig),
    Calibration(CalibrationConfig),
    Variance(VarianceCheckConfig),
    Mu(MuConfig),
    Lasso(LassoConfig),
    Timing(TimingConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Power(_) => "power",
            Experiment::Calibration(_) => "calibration",
            Experiment::Variance(_) => "variance",
            Experiment::Mu(_) => "mu",
            Experiment::Lasso(_) => "lasso",
            Experiment::Timing(_) => "timing",
        }
    }
}

/// Every key an experiment file may contain.
#[derive(Debug, Default, Deserialize)]
struct FlatFile {
    experiment: String,
    models: Option<Vec<String>>,
    a_grid: Option<Vec<f64>>,
    n: Option<usize>,
    n_grid: Option<Vec<usize>>,
    d: Option<usize>,
    d1: Option<usize>,
    d2: Option<usize>,
    d_grid: Option<Vec<usize>>,
    alphas: Option<Vec<f64>>,
    reps: Option<usize>,
    methods: Option<Vec<String>>,
    seed: Option<u64>,
    covariance: Option<String>,
    ar1_rho: Option<f64>,
    tails: Option<String>,
    df: Option<f64>,
    standardize: Option<bool>,
    permutations: Option<usize>,
    jobs: Option<usize>,
    n_train: Option<usize>,
    n2: Option<usize>,
    rho: Option<f64>,
    s2: Option<usize>,
    c_lambda: Option<f64>,
    classifier: Option<String>,
    #[serde(flatten)]
    overrides: ClassifierOverrides,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment", "models", "a_grid", "n", "n_grid", "d", "d1", "d2", "d_grid", "alphas", "reps", "methods",
    "seed", "covariance", "ar1_rho", "tails", "df", "standardize", "permutations", "jobs", "n_train", "n2",
    "rho", "s2", "c_lambda", "classifier", "lambda", "features", "max_iter", "tol", "hidden", "l1_penalty",
    "dropout_rate", "epochs", "batch", "step", "s1", "k_n", "cap",
];

impl FlatFile {
    fn classifier(&self, default: ClassifierConfig) -> Result<ClassifierConfig> {
        let base = match &self.classifier {
            Some(name) => ClassifierConfig::by_name(name).map_err(|e| Error::Config(e.to_string()))?,
            None => default,
        };
        self.overrides.apply(base)
    }

    fn covariance(&self) -> Result<Covariance> {
        match self.covariance.as_deref() {
            None | Some("identity") => Ok(Covariance::Identity),
            Some("ar1") => Ok(Covariance::Ar1 {
                rho: self.ar1_rho.ok_or_else(|| Error::Config("covariance = \"ar1\" needs ar1_rho".into()))?,
            }),
            Some(other) => Err(Error::Config(format!("unknown covariance '{other}' (expected identity or ar1)"))),
        }
    }

    fn tails(&self) -> Result<Tails> {
        match self.tails.as_deref() {
            None | Some("gaussian") => Ok(Tails::Gaussian),
            Some("student_t") => Ok(Tails::StudentT { df: self.df.unwrap_or(2.0) }),
            Some(other) => Err(Error::Config(format!("unknown tails '{other}' (expected gaussian or student_t)"))),
        }
    }

    fn methods(&self) -> Result<Option<Vec<Method>>> {
        self.methods
            .as_ref()
            .map(|ms| ms.iter().map(|m| m.parse()).collect())
            .transpose()
    }

    fn into_experiment(self) -> Result<Experiment> {
        let f = &self;
        Ok(match f.experiment.as_str() {
            "power" => {
                let mut c = PowerConfig::default();
                if let Some(ms) = &f.models {
                    c.models = ms
                        .iter()
                        .map(|m| m.parse::<ModelId>())
                        .collect::<Result<_>>()
                        .map_err(|e| Error::Config(e.to_string()))?;
                }
                if let Some(v) = &f.a_grid {
                    c.a_grid = v.clone();
                }
                if let Some(v) = &f.alphas {
                    c.alphas = v.clone();
                }
                if let Some(v) = f.methods()? {
                    c.methods = v;
                }
                set(&mut c.n, f.n);
                set(&mut c.d1, f.d1.or(f.d));
                set(&mut c.d2, f.d2.or(f.d));
                set(&mut c.reps, f.reps);
                set(&mut c.master_seed, f.seed);
                set(&mut c.standardize, f.standardize);
                set(&mut c.permutations, f.permutations);
                set(&mut c.jobs, f.jobs);
                c.covariance = f.covariance()?;
                c.tails = f.tails()?;
                c.classifier = f.classifier(c.classifier.clone())?;
                Experiment::Power(c)
            }
            "calibration" => {
                let mut c = CalibrationConfig::default();
                set(&mut c.n, f.n);
                set(&mut c.d1, f.d1.or(f.d));
                set(&mut c.d2, f.d2.or(f.d));
                set(&mut c.reps, f.reps);
                set(&mut c.master_seed, f.seed);
                set(&mut c.standardize, f.standardize);
                set(&mut c.jobs, f.jobs);
                c.classifier = f.classifier(c.classifier.clone())?;
                Experiment::Calibration(c)
            }
            "variance" => {
                let mut c = VarianceCheckConfig::default();
                set(&mut c.n_train, f.n_train);
                set(&mut c.n2, f.n2);
                set(&mut c.d1, f.d1.or(f.d));
                set(&mut c.d2, f.d2.or(f.d));
                set(&mut c.reps, f.reps);
                set(&mut c.master_seed, f.seed);
                c.classifier = f.classifier(c.classifier.clone())?;
                Experiment::Variance(c)
            }
            "mu" => {
                let mut c = MuConfig::default();
                set(&mut c.rho, f.rho);
                if let Some(v) = &f.n_grid {
                    c.n_grid = v.clone();
                }
                set(&mut c.reps, f.reps);
                set(&mut c.master_seed, f.seed);
                Experiment::Mu(c)
            }
            "lasso" => {
                let mut c = LassoConfig::default();
                set(&mut c.d, f.d);
                set(&mut c.s1, f.overrides.s1);
                set(&mut c.s2, f.s2);
                set(&mut c.k_n, f.overrides.k_n);
                if let Some(v) = &f.n_grid {
                    c.n_grid = v.clone();
                }
                set(&mut c.reps, f.reps);
                set(&mut c.master_seed, f.seed);
                set(&mut c.c_lambda, f.c_lambda);
                Experiment::Lasso(c)
            }
            "timing" => {
                let mut c = TimingConfig::default();
                if let Some(v) = &f.n_grid {
                    c.n_grid = v.clone();
                }
                if let Some(v) = &f.d_grid {
                    c.d_grid = v.clone();
                }
                if let Some(v) = f.methods()? {
                    c.methods = v;
                }
                set(&mut c.reps, f.reps);
                set(&mut c.master_seed, f.seed);
                set(&mut c.permutations, f.permutations);
                c.classifier = f.classifier(c.classifier.clone())?;
                Experiment::Timing(c)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown experiment '{other}' (expected power, calibration, variance, mu, lasso or timing)"
                )))
            }
        })
    }
}

pub fn parse_experiment(text: &str) -> Result<Experiment> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(k) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown key '{k}'")));
    }
    if !table.contains_key("experiment") {
        return Err(Error::Config("missing key 'experiment'".into()));
    }
    let flat: FlatFile = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    flat.into_experiment()
}

pub fn load_experiment(path: impl AsRef<Path>) -> Result<Experiment> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_experiment(&text)
}
