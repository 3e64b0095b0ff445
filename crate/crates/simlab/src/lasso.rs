//! Estimation-error rate of the penalized quadratic classifier on a planted
//! sparse design.
//!
//! `z ~ U[−1,1]^d` and the label is Bernoulli(`g(z)`) with
//! `g(z) = Σ_{j<s2} w_j z_j²`, `w_j ∝ s2 − j`, `Σ w_j = 1`. With the
//! univariate basis `(t, t², t³)` per coordinate, the population minimizer
//! of `βᵀΓβ − 2γᵀβ` is the projection of `g` on the basis, which has exactly
//! `s2` nonzero entries: `w_j` on `z_j²`.

use cpc_core::classifiers::basis::{Basis, BasisConfig};
use cpc_core::classifiers::quadratic::{solve, QuadOptions, QuadraticProblem};
use cpc_core::rng::{derive_seed, rng_from_seed};
use cpc_core::{Error, Result};
use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub d: usize,
    pub s1: usize,
    pub s2: usize,
    pub k_n: usize,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    /// `λ = c_lambda · √(log m / n)`.
    pub c_lambda: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            d: 20,
            s1: 1,
            s2: 3,
            k_n: 3,
            n_grid: vec![250, 500, 1000, 2000],
            reps: 20,
            master_seed: 42,
            c_lambda: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoRow {
    pub n: usize,
    pub lambda: f64,
    pub median_error: f64,
    pub median_nnz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoRate {
    pub m: usize,
    pub rows: Vec<LassoRow>,
    /// Least-squares slope of log median error on log n.
    pub slope: f64,
}

/// The planted problem: basis, true coefficients and the label function.
pub struct PlantedDesign {
    pub basis: Basis,
    pub beta_star: Vec<f64>,
    weights: Vec<f64>,
}

impl PlantedDesign {
    pub fn new(cfg: &LassoConfig) -> Result<Self> {
        if cfg.s1 != 1 {
            return Err(Error::InvalidParameter(format!(
                "the planted design uses univariate bases only (s1 = 1), got s1 = {}",
                cfg.s1
            )));
        }
        if cfg.k_n < 2 {
            return Err(Error::InvalidParameter("planted design needs k_n >= 2 for the squared terms".into()));
        }
        if cfg.s2 > cfg.d {
            return Err(Error::InvalidParameter(format!("s2 = {} exceeds d = {}", cfg.s2, cfg.d)));
        }
        let basis = Basis::new(cfg.d, BasisConfig::new(cfg.s1, cfg.k_n))?;
        let total: f64 = (1..=cfg.s2).map(|k| k as f64).sum();
        let weights: Vec<f64> = (0..cfg.s2).map(|j| (cfg.s2 - j) as f64 / total).collect();
        let mut beta_star = vec![0.0; basis.dim()];
        for (j, &w) in weights.iter().enumerate() {
            // Locate z_j² by expanding 2·e_j: only coordinate j's powers survive.
            let mut e = vec![0.0; cfg.d];
            e[j] = 2.0;
            let pos = basis
                .expand(&e)
                .iter()
                .position(|&v| v == 4.0)
                .expect("basis contains the square of every coordinate");
            beta_star[pos] = w;
        }
        Ok(Self {
            basis,
            beta_star,
            weights,
        })
    }

    pub fn g(&self, z: &[f64]) -> f64 {
        self.weights.iter().zip(z).map(|(w, v)| w * v * v).sum()
    }

    /// `2n` labelled draws folded into the quadratic problem with
    /// normalizer `n`.
    pub fn sample_problem(&self, n: usize, seed: u64) -> QuadraticProblem {
        let d = self.basis.input_dim();
        let mut rng = rng_from_seed(seed);
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        let mut z = vec![0.0; d];
        for _ in 0..2 * n {
            z.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            let label = rng.random_bool(self.g(&z));
            let xi = self.basis.expand(&z);
            if label { pos.extend(xi) } else { neg.extend(xi) }
        }
        let m = self.basis.dim();
        let to = |v: Vec<f64>| Array2::from_shape_vec((v.len() / m, m), v).expect("row-major");
        QuadraticProblem::from_expanded(&to(pos), &to(neg), n)
    }

    pub fn error(&self, beta: &[f64]) -> f64 {
        beta.iter().zip(&self.beta_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

pub fn lambda_for(c_lambda: f64, m: usize, n: usize) -> f64 {
    c_lambda * ((m as f64).ln() / n as f64).sqrt()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn lasso_rate_experiment(cfg: &LassoConfig) -> Result<LassoRate> {
    if cfg.reps == 0 || cfg.n_grid.len() < 2 {
        return Err(Error::Config("lasso experiment needs reps >= 1 and at least two n values".into()));
    }
    let design = PlantedDesign::new(cfg)?;
    let m = design.basis.dim();
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let lambda = lambda_for(cfg.c_lambda, m, n);
        let mut errs = Vec::with_capacity(cfg.reps);
        let mut nnz = Vec::with_capacity(cfg.reps);
        for rep in 0..cfg.reps {
            let problem = design.sample_problem(n, derive_seed(&[cfg.master_seed, n as u64, rep as u64]));
            let sol = solve(&problem, lambda, QuadOptions::default())?;
            errs.push(design.error(&sol.beta));
            nnz.push(sol.beta.iter().filter(|&&b| b != 0.0).count() as f64);
        }
        rows.push(LassoRow {
            n,
            lambda,
            median_error: median(&mut errs),
            median_nnz: median(&mut nnz),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_error.ln()).collect();
    Ok(LassoRate {
        m,
        rows,
        slope: ls_slope(&xs, &ys),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_coefficients() {
        let d = PlantedDesign::new(&LassoConfig::default()).unwrap();
        assert_eq!(d.basis.dim(), 60);
        let nz: Vec<f64> = d.beta_star.iter().copied().filter(|&b| b != 0.0).collect();
        assert_eq!(nz, vec![0.5, 1.0 / 3.0, 1.0 / 6.0]);
        let z = vec![0.5; 20];
        assert!((d.g(&z) - 0.25).abs() < 1e-15);
        // ξ(z)ᵀβ* reproduces g.
        let fit: f64 = d.basis.expand(&z).iter().zip(&d.beta_star).map(|(a, b)| a * b).sum();
        assert!((fit - d.g(&z)).abs() < 1e-15);
    }

    #[test]
    fn only_univariate_bases() {
        let cfg = LassoConfig { s1: 2, ..Default::default() };
        assert!(matches!(PlantedDesign::new(&cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn doubling_lambda_never_adds_nonzeros() {
        let cfg = LassoConfig::default();
        let d = PlantedDesign::new(&cfg).unwrap();
        for inst in 0..10 {
            let p = d.sample_problem(300, 1000 + inst);
            let lam = lambda_for(cfg.c_lambda, 60, 300);
            let nnz = |l: f64| solve(&p, l, QuadOptions::default()).unwrap().beta.iter().filter(|&&b| b != 0.0).count();
            assert!(nnz(2.0 * lam) <= nnz(lam), "instance {inst}");
        }
    }

    #[test]
    fn null_coefficients_shrink_to_zero() {
        let cfg = LassoConfig {
            s2: 0,
            n_grid: vec![1000, 1001],
            reps: 5,
            ..Default::default()
        };
        let r = lasso_rate_experiment(&cfg).unwrap();
        assert!(r.rows[0].median_error < 0.05, "{:?}", r.rows[0]);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|v| (3.0 * v.powf(-0.5)).ln()).collect();
        assert!((ls_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }
}
