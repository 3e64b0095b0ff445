//! Exact check of the total-variation sandwich for the likelihood-ratio
//! rank probability on finite supports.
//!
//! For `V ~ P`, `W ~ Q` independent and `L = dP/dQ`, the quantity
//! `½ − P{L(V) < L(W)} − ½ P{L(V) = L(W)}` equals `¼ E_{Q⊗Q} |L − L'|`,
//! which lies between `¼ Σ|p − q|` and `½ Σ|p − q|`.

use cpc_core::rng::rng_from_seed;
use cpc_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MAX_SUPPORT: usize = 64;
pub const SANDWICH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistPair {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl DiscreteDistPair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: q.len(),
            });
        }
        if p.is_empty() || p.len() > MAX_SUPPORT {
            return Err(Error::InvalidParameter(format!(
                "support size must lie in 1..={MAX_SUPPORT}, got {}",
                p.len()
            )));
        }
        for v in [&p, &q] {
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidParameter("probabilities must be finite and >= 0".into()));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("probabilities sum to {s}, not 1")));
            }
        }
        if let Some(i) = (0..p.len()).find(|&i| p[i] > 0.0 && q[i] == 0.0) {
            return Err(Error::AbsoluteContinuityViolated(i));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `p_i / q_i` on the support of `q`; points with `q_i = 0` carry no mass
    /// under either law and are skipped.
    fn ratios(&self) -> Vec<(f64, f64, f64)> {
        (0..self.p.len())
            .filter(|&i| self.q[i] > 0.0)
            .map(|i| (self.p[i], self.q[i], self.p[i] / self.q[i]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvBound {
    /// `½ Σ|p − q|`.
    pub tv: f64,
    /// `Σ|p − q|`.
    pub l1: f64,
    pub p_less: f64,
    pub p_tie: f64,
    /// `½ − p_less − ½ p_tie`.
    pub middle: f64,
    /// `¼ Σ|p − q|`.
    pub lhs: f64,
    /// `½ Σ|p − q|`.
    pub rhs: f64,
    pub pass: bool,
}

/// Enumerates all outcome pairs. Equal ratios receive half their mass, which
/// is the exact expectation of a uniform tie-break.
pub fn tv_bound_check(pair: &DiscreteDistPair) -> TvBound {
    let l1: f64 = pair.p.iter().zip(&pair.q).map(|(a, b)| (a - b).abs()).sum();
    let r = pair.ratios();
    let (mut p_less, mut p_tie) = (0.0, 0.0);
    for &(pv, _, lv) in &r {
        for &(_, qw, lw) in &r {
            if lv < lw {
                p_less += pv * qw;
            } else if lv == lw {
                p_tie += pv * qw;
            }
        }
    }
    let middle = 0.5 - p_less - 0.5 * p_tie;
    let (lhs, rhs) = (0.25 * l1, 0.5 * l1);
    TvBound {
        tv: 0.5 * l1,
        l1,
        p_less,
        p_tie,
        middle,
        lhs,
        rhs,
        pass: lhs <= middle + SANDWICH_TOL && middle <= rhs + SANDWICH_TOL,
    }
}

/// A random pair on `k ≤ max_support` points. Roughly a third of the draws
/// put `p/q` on a coarse grid so that ratio ties are frequent, and some `p`
/// entries are zeroed.
pub fn random_pair(max_support: usize, rng: &mut impl rand::Rng) -> DiscreteDistPair {
    let k = rng.random_range(1..=max_support);
    let mut q: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let qs: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= qs);
    let mut p: Vec<f64> = if rng.random_bool(1.0 / 3.0) {
        q.iter().map(|&v| v * rng.random_range(0..4) as f64).collect()
    } else {
        (0..k)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) })
            .collect()
    };
    if p.iter().all(|&v| v == 0.0) {
        p[rng.random_range(0..k)] = 1.0;
    }
    let ps: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= ps);
    DiscreteDistPair::new(p, q).expect("q is positive everywhere")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvFuzzSummary {
    pub checked: usize,
    pub failures: usize,
    /// Largest amount by which either side of the sandwich is violated
    /// (negative when every pair has slack).
    pub worst_margin: f64,
}

pub fn tv_fuzz(count: usize, max_support: usize, seed: u64) -> TvFuzzSummary {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let b = tv_bound_check(&random_pair(max_support, &mut rng));
        failures += (!b.pass) as usize;
        worst = worst.max(b.lhs - b.middle).max(b.middle - b.rhs);
    }
    TvFuzzSummary {
        checked: count,
        failures,
        worst_margin: worst,
    }
}

/// The hand-enumerated two-point cases.
pub fn two_point_examples() -> Vec<(DiscreteDistPair, TvBound)> {
    let cases = [
        (vec![0.5, 0.5], vec![0.5, 0.5]),
        (vec![1.0, 0.0], vec![0.5, 0.5]),
        (vec![0.75, 0.25], vec![0.25, 0.75]),
        (vec![0.0, 1.0], vec![0.5, 0.5]),
    ];
    cases
        .into_iter()
        .map(|(p, q)| {
            let pair = DiscreteDistPair::new(p, q).expect("valid example");
            let b = tv_bound_check(&pair);
            (pair, b)
        })
        .collect()
}
