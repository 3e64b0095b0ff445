//! The QDA experiment on a bivariate normal with local correlation `ρ/√n`.
//!
//! With `u = (x+y)/√2`, `v = (x−y)/√2`, the estimated log density ratio is
//! `r̂ u² / (2(1+r̂)) − r̂ v² / (2(1−r̂))` up to a constant. For `V` joint with
//! correlation `r` and `W` from the product law, the difference of scores is
//! `Σ λ_k Z_k²` with independent standard normals and
//!
//! ```text
//! λ = (r̂/2) · ((1+r)/(1+r̂), −(1−r)/(1−r̂), −1/(1+r̂), 1/(1−r̂))
//! ```
//!
//! so `μ(r̂) = P{score(V) < score(W)}` is a quadratic-form probability,
//! evaluated here by Imhof's inversion formula.

use cpc_core::rng::{derive_seed, rng_from_seed};
use cpc_core::{Error, Result};
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

const IMHOF_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 60;
/// Estimated correlations are kept inside this bound.
pub const R_HAT_CLAMP: f64 = 0.999;

/// `P{Σ λ_k Z_k² < 0}` for independent standard normals `Z_k`.
pub fn quadratic_form_below_zero(lambdas: &[f64]) -> f64 {
    let scale = lambdas.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let lam: Vec<f64> = lambdas.iter().map(|v| v / scale).collect();
    let at_zero = 0.5 * lam.iter().sum::<f64>();
    // Imhof integrand sin θ(u) / (u ρ(u)) after u = t/(1−t).
    let f = |t: f64| -> f64 {
        if t <= 0.0 {
            return at_zero;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let u = t / (1.0 - t);
        let theta: f64 = 0.5 * lam.iter().map(|l| (l * u).atan()).sum::<f64>();
        let log_rho: f64 = 0.25 * lam.iter().map(|l| (1.0 + (l * u).powi(2)).ln()).sum::<f64>();
        theta.sin() / (u * log_rho.exp()) / (1.0 - t).powi(2)
    };
    0.5 - adaptive_simpson(&f, 0.0, 1.0, IMHOF_TOL) / std::f64::consts::PI
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// The weights of the score difference for estimate `r_hat` and truth `r`.
pub fn score_difference_weights(r_hat: f64, r: f64) -> [f64; 4] {
    let h = 0.5 * r_hat;
    [
        h * (1.0 + r) / (1.0 + r_hat),
        -h * (1.0 - r) / (1.0 - r_hat),
        -h / (1.0 + r_hat),
        h / (1.0 - r_hat),
    ]
}

/// `μ(r̂; r)`. At `r̂ = 0` every score is equal and the tie-break gives ½.
pub fn mu(r_hat: f64, r: f64) -> f64 {
    if r_hat == 0.0 {
        return 0.5;
    }
    let r_hat = r_hat.clamp(-R_HAT_CLAMP, R_HAT_CLAMP);
    quadratic_form_below_zero(&score_difference_weights(r_hat, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuConfig {
    pub rho: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
}

impl Default for MuConfig {
    fn default() -> Self {
        Self {
            rho: 5.0,
            n_grid: vec![100, 1000, 10_000],
            reps: 1_000_000,
            master_seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuRow {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    /// True correlation `ρ/√n`.
    pub r: f64,
    pub mu: f64,
    pub mu_star: f64,
    /// `√n2 (μ* − μ)`.
    pub scaled_gap: f64,
    /// Monte Carlo standard error of `scaled_gap`.
    pub mc_se: f64,
}

/// `r̂ = n1⁻¹ Σ X_i Y_i` drawn exactly: `Σ XY = ((1+r)A − (1−r)B)/2` with
/// `A, B ~ χ²(n1)` independent.
fn draw_r_hat(r: f64, n1: usize, rng: &mut impl rand::Rng) -> f64 {
    let chi = ChiSquared::new(n1 as f64).expect("n1 >= 1");
    let (a, b) = (chi.sample(rng), chi.sample(rng));
    (0.5 * ((1.0 + r) * a - (1.0 - r) * b)) / n1 as f64
}

/// `μ(·; r)` on a uniform grid, linearly interpolated. Cells that contain
/// zero, where `μ` jumps, and points off the grid are evaluated directly.
struct MuTable {
    r: f64,
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl MuTable {
    fn new(r: f64, lo: f64, hi: f64, cells: usize) -> Self {
        let step = (hi - lo) / cells as f64;
        let values = (0..=cells).map(|k| mu(lo + k as f64 * step, r)).collect();
        Self { r, lo, step, values }
    }

    fn eval(&self, r_hat: f64) -> f64 {
        let pos = (r_hat - self.lo) / self.step;
        if pos >= 0.0 && pos < (self.values.len() - 1) as f64 {
            let k = pos as usize;
            let (a, b) = (self.lo + k as f64 * self.step, self.lo + (k + 1) as f64 * self.step);
            if a > 0.0 || b < 0.0 {
                let w = pos - k as f64;
                return (1.0 - w) * self.values[k] + w * self.values[k + 1];
            }
        }
        mu(r_hat, self.r)
    }
}

/// Monte Carlo estimate of `μ* = E μ(r̂)` over the training-half estimate,
/// against the exact `μ = μ(r; r)`.
pub fn mu_condition_check(cfg: &MuConfig) -> Result<Vec<MuRow>> {
    if cfg.reps < 2 || cfg.n_grid.is_empty() || cfg.n_grid.iter().any(|&n| n < 4) {
        return Err(Error::Config("mu check needs reps >= 2 and every n >= 4".into()));
    }
    cfg.n_grid
        .iter()
        .map(|&n| {
            let r = cfg.rho / (n as f64).sqrt();
            if !(r.abs() < R_HAT_CLAMP) {
                return Err(Error::Config(format!("rho/sqrt(n) = {r} is not a valid correlation")));
            }
            let n1 = n.div_ceil(2);
            let n2 = n - n1;
            let mu0 = mu(r, r);
            let sd = ((1.0 + r * r) / n1 as f64).sqrt();
            let table = MuTable::new(r, r - 8.0 * sd, r + 8.0 * sd, 3200);
            let mut rng = rng_from_seed(derive_seed(&[cfg.master_seed, n as u64]));
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..cfg.reps {
                let v = table.eval(draw_r_hat(r, n1, &mut rng)) - mu0;
                sum += v;
                sum_sq += v * v;
            }
            let m = cfg.reps as f64;
            let mean = sum / m;
            let var = (sum_sq - m * mean * mean) / (m - 1.0);
            let root = (n2 as f64).sqrt();
            Ok(MuRow {
                n,
                n1,
                n2,
                r,
                mu: mu0,
                mu_star: mu0 + mean,
                scaled_gap: root * mean,
                mc_se: root * (var.max(0.0) / m).sqrt(),
            })
        })
        .collect()
}
