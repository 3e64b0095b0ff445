//! L1-penalized logistic regression by proximal gradient with backtracking.

use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::split::LabeledTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScoreModel {
    /// Feature weights followed by the intercept.
    pub weights: Vec<f64>,
    pub features: FeatureMap,
    pub d1: usize,
    pub d2: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

impl LinearScoreModel {
    /// All-zero weights: scores 0.5 everywhere.
    pub fn zeros(d1: usize, d2: usize, features: FeatureMap) -> Self {
        Self {
            weights: vec![0.0; features.output_dim(d1, d2) + 1],
            features,
            d1,
            d2,
            lambda: 0.0,
            iterations: 0,
            converged: true,
            objective: std::f64::consts::LN_2,
        }
    }

    pub fn n_zero_weights(&self) -> usize {
        self.weights[..self.weights.len() - 1]
            .iter()
            .filter(|w| **w == 0.0)
            .count()
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights[..self.weights.len() - 1].iter().map(|w| w.abs()).sum()
    }

    pub(crate) fn logits(&self, design: &Design) -> Vec<f64> {
        let f = self.features.apply(design, self.d1);
        let (w, b) = self.weights.split_at(self.weights.len() - 1);
        f.matvec(w).into_iter().map(|z| z + b[0]).collect()
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a Design,
    y: &'a [f64],
    lambda: f64,
}

impl Problem<'_> {
    fn margins(&self, w: &[f64]) -> Vec<f64> {
        let (coef, b) = w.split_at(w.len() - 1);
        self.x.matvec(coef).into_iter().map(|z| z + b[0]).collect()
    }

    /// Mean logistic loss at the given margins.
    fn loss(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.y)
            .map(|(&zi, &yi)| softplus(zi) - yi * zi)
            .sum::<f64>()
            / z.len() as f64
    }

    fn grad(&self, z: &[f64]) -> Vec<f64> {
        let n = z.len() as f64;
        let r: Vec<f64> = z.iter().zip(self.y).map(|(&zi, &yi)| (sigmoid(zi) - yi) / n).collect();
        let mut g = self.x.t_matvec(&r);
        g.push(r.iter().sum());
        g
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        self.lambda * w[..w.len() - 1].iter().map(|v| v.abs()).sum::<f64>()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Fit result plus the objective after every accepted step.
pub struct LogisticFit {
    pub model: LinearScoreModel,
    pub trace: Vec<f64>,
}

/// Minimizes mean logistic loss + `λ‖w‖₁` (intercept unpenalized) on the
/// feature-mapped training table.
pub fn fit_logistic_l1(
    train: &LabeledTable,
    d1: usize,
    features: FeatureMap,
    lambda: f64,
    opts: LogisticOptions,
) -> Result<LogisticFit> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    train.require_two_classes()?;
    let d2 = train.design.n_cols() - d1;
    let x = features.apply(&train.design, d1);
    let prob = Problem {
        x: &x,
        y: &train.labels,
        lambda,
    };
    let p = x.n_cols() + 1;
    let mut w = vec![0.0; p];
    let mut z = prob.margins(&w);
    let mut loss = prob.loss(&z);
    let mut obj = loss + prob.penalty(&w);
    let mut trace = vec![obj];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let g = prob.grad(&z);
        let (w_new, z_new, loss_new) = loop {
            let mut cand: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
            for c in cand[..p - 1].iter_mut() {
                *c = soft_threshold(*c, step * lambda);
            }
            let zc = prob.margins(&cand);
            let lc = prob.loss(&zc);
            if !lc.is_finite() {
                return Err(Error::NonFiniteLoss(iterations));
            }
            let mut lin = 0.0;
            let mut quad = 0.0;
            for k in 0..p {
                let dk = cand[k] - w[k];
                lin += g[k] * dk;
                quad += dk * dk;
            }
            if lc <= loss + lin + quad / (2.0 * step) + 1e-15 * loss.abs() {
                break (cand, zc, lc);
            }
            step *= 0.5;
            if step < 1e-20 {
                return Err(Error::NonFiniteLoss(iterations));
            }
        };
        let obj_new = loss_new + prob.penalty(&w_new);
        let decrease = obj - obj_new;
        if obj_new <= obj {
            w = w_new;
            z = z_new;
            loss = loss_new;
            obj = obj_new;
            trace.push(obj);
        }
        if decrease < opts.tol {
            converged = true;
            break;
        }
        step *= 1.25;
    }

    Ok(LogisticFit {
        model: LinearScoreModel {
            weights: w,
            features,
            d1,
            d2,
            lambda,
            iterations,
            converged,
            objective: obj,
        },
        trace,
    })
}
