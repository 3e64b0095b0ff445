//! Rank-sum statistic, empirical CDFs and the plug-in variance.
//!
//! All statistics operate on a [`ScoredEvaluation`]: the classifier scores of
//! the evaluation pairs `(x_i, y_i)` and of their cyclic partners
//! `(x_i, y_{i+1})`, both in the same index order.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::split::next_position;

/// Lower bound applied to the plug-in variance.
pub const VARIANCE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEvaluation {
    s_joint: Vec<f64>,
    s_prod: Vec<f64>,
}

impl ScoredEvaluation {
    pub fn new(s_joint: Vec<f64>, s_prod: Vec<f64>) -> Result<Self> {
        if s_joint.len() != s_prod.len() {
            return Err(Error::LengthMismatch {
                left: s_joint.len(),
                right: s_prod.len(),
            });
        }
        if s_joint.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(v) = s_joint.iter().chain(&s_prod).find(|v| !v.is_finite()) {
            return Err(Error::ScoreOutOfRange(*v));
        }
        Ok(Self { s_joint, s_prod })
    }

    pub fn n2(&self) -> usize {
        self.s_joint.len()
    }

    pub fn s_joint(&self) -> &[f64] {
        &self.s_joint
    }

    pub fn s_prod(&self) -> &[f64] {
        &self.s_prod
    }

    /// Applies `g` to every score.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.s_joint.iter().map(|&v| g(v)).collect(),
            self.s_prod.iter().map(|&v| g(v)).collect(),
        )
    }

    pub fn swapped(&self) -> Self {
        Self {
            s_joint: self.s_prod.clone(),
            s_prod: self.s_joint.clone(),
        }
    }

    fn require_n2(&self, min: usize) -> Result<()> {
        if self.n2() < min {
            Err(Error::SampleTooSmall { n: self.n2(), min })
        } else {
            Ok(())
        }
    }
}

/// Empirical distribution function `F(t) = #{v ≤ t} / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Number of sample values `≤ t`.
    pub fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|&v| v <= t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn ecdf(values: &[f64]) -> Result<Ecdf> {
    Ecdf::new(values)
}

/// Outcome of [`rank_sum_r`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    /// `count / n2²`.
    pub r: f64,
    /// Number of pairs `(i, j)` ranked "joint below product", ties included.
    pub count: u64,
    /// Number of pairs with `s_joint[i] == s_prod[j]`.
    pub tie_pairs: u64,
}

/// Per-element uniforms `(ζ, η)` used to break ties; `ζ` for the joint
/// scores, then `η` for the product scores, from one seeded stream.
pub fn tie_break_uniforms(n2: usize, tie_seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(tie_seed);
    let zeta = (0..n2).map(|_| rng.random::<f64>()).collect();
    let eta = (0..n2).map(|_| rng.random::<f64>()).collect();
    (zeta, eta)
}

/// Rank-sum statistic
/// `R = n2⁻² Σ_{i,j} [1{a_i < b_j} + 1{ζ_i < η_j} 1{a_i = b_j}]`
/// with `a = s_joint`, `b = s_prod`. Small values indicate dependence.
///
/// Sorts `(b_j, η_j)` once and answers each `a_i` by binary search, so the
/// cost is O(n2 log n2) with exact integer counting.
pub fn rank_sum_r(eval: &ScoredEvaluation, tie_seed: u64) -> Result<RankSum> {
    eval.require_n2(3)?;
    let n2 = eval.n2();
    let (zeta, eta) = tie_break_uniforms(n2, tie_seed);
    let mut prod: Vec<(f64, f64)> = eval.s_prod.iter().copied().zip(eta).collect();
    prod.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));

    let mut count = 0u64;
    let mut tie_pairs = 0u64;
    for (&a, &z) in eval.s_joint.iter().zip(&zeta) {
        let lo = prod.partition_point(|p| p.0 < a);
        let hi = lo + prod[lo..].partition_point(|p| p.0 <= a);
        count += (n2 - hi) as u64;
        if hi > lo {
            tie_pairs += (hi - lo) as u64;
            let below = prod[lo..hi].partition_point(|p| p.1 <= z);
            count += (hi - lo - below) as u64;
        }
    }
    let denom = (n2 as f64) * (n2 as f64);
    Ok(RankSum {
        r: count as f64 / denom,
        count,
        tie_pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    /// Reported value, `max(raw, VARIANCE_FLOOR)`.
    pub value: f64,
    pub raw: f64,
    pub floored: bool,
}

/// Plug-in variance of `√n2 · R` under independence:
///
/// `σ̂² = 1/6 − (2/n2) Σ_i h(i) h'(i) − (2/n2) Σ_i h(i+1) h'(i)`
///
/// with `h(i) = 1/2 − F̂(s_joint[i])`, `h'(i) = 1/2 − F̂(s_prod[i])`, `F̂` the
/// ECDF of `s_prod` and `i+1` the cyclic successor.
pub fn variance_hat(eval: &ScoredEvaluation) -> Result<VarianceEstimate> {
    eval.require_n2(3)?;
    let f = Ecdf::new(&eval.s_prod)?;
    let h: Vec<f64> = eval.s_joint.iter().map(|&s| 0.5 - f.eval(s)).collect();
    let hp: Vec<f64> = eval.s_prod.iter().map(|&s| 0.5 - f.eval(s)).collect();
    Ok(floor_variance(variance_from_projections(&h, &hp)))
}

/// Shared tail of the variance formula, given the projected scores.
pub(crate) fn variance_from_projections(h: &[f64], hp: &[f64]) -> f64 {
    let n2 = h.len();
    let mut same = 0.0;
    let mut shifted = 0.0;
    for i in 0..n2 {
        same += h[i] * hp[i];
        shifted += h[next_position(i, n2)] * hp[i];
    }
    let n = n2 as f64;
    1.0 / 6.0 - 2.0 / n * same - 2.0 / n * shifted
}

pub(crate) fn floor_variance(raw: f64) -> VarianceEstimate {
    if raw < VARIANCE_FLOOR {
        VarianceEstimate {
            value: VARIANCE_FLOOR,
            raw,
            floored: true,
        }
    } else {
        VarianceEstimate {
            value: raw,
            raw,
            floored: false,
        }
    }
}

/// Mean score difference `n2⁻¹ Σ (s_joint[i] − s_prod[i])`.
pub fn t_statistic(eval: &ScoredEvaluation) -> f64 {
    let n = eval.n2() as f64;
    eval.s_joint
        .iter()
        .zip(&eval.s_prod)
        .map(|(a, b)| a - b)
        .sum::<f64>()
        / n
}

fn logit(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok((p / (1.0 - p)).ln())
    } else {
        Err(Error::ScoreOutOfRange(p))
    }
}

/// Mean log-odds difference, an estimate of the Kullback–Leibler divergence
/// between the joint and product distributions.
pub fn kl_statistic(eval: &ScoredEvaluation) -> Result<f64> {
    let mut acc = 0.0;
    for (&a, &b) in eval.s_joint.iter().zip(&eval.s_prod) {
        acc += logit(a)? - logit(b)?;
    }
    Ok(acc / eval.n2() as f64)
}
