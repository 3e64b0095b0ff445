//! Penalized quadratic estimator of the class probability on a basis
//! expansion: minimize `βᵀΓ̂β − 2γ̂ᵀβ + λ‖β‖₁`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::basis::{Basis, BasisConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadScoreModel {
    pub beta: Vec<f64>,
    pub basis: BasisConfig,
    pub input_dim: usize,
    pub lambda: f64,
    pub sweeps: usize,
    pub converged: bool,
}

impl QuadScoreModel {
    pub fn nnz(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }

    /// Unclamped `ξ(z)ᵀβ` for each row.
    pub(crate) fn raw(&self, rows: impl Iterator<Item = Vec<f64>>) -> Result<Vec<f64>> {
        let basis = Basis::new(self.input_dim, self.basis)?;
        let mut xi = Vec::new();
        Ok(rows
            .map(|z| {
                basis.expand_into(&z, &mut xi);
                xi.iter().zip(&self.beta).map(|(a, b)| a * b).sum()
            })
            .collect())
    }
}

/// Sufficient statistics of the quadratic objective.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    pub gram: Array2<f64>,
    pub linear: Array1<f64>,
}

impl QuadraticProblem {
    /// `Γ̂ = n⁻¹ Σ ξξᵀ` over positive and negative rows together and
    /// `γ̂ = n⁻¹ Σ_{positive} ξ`.
    pub fn from_expanded(positive: &Array2<f64>, negative: &Array2<f64>, n: usize) -> Self {
        let nf = n as f64;
        let gram = (positive.t().dot(positive) + negative.t().dot(negative)) / nf;
        let linear = positive.sum_axis(ndarray::Axis(0)) / nf;
        Self { gram, linear }
    }

    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let b = Array1::from(beta.to_vec());
        b.dot(&self.gram.dot(&b)) - 2.0 * self.linear.dot(&b)
            + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Smallest λ at which `β = 0` satisfies the optimality conditions.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.linear.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub struct QuadSolution {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after each sweep.
    pub trace: Vec<f64>,
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

/// Cyclic coordinate descent. Coordinate `j` moves to
/// `S(γ̂_j − Σ_{k≠j} Γ̂_jk β_k, λ/2) / Γ̂_jj`.
pub fn solve(problem: &QuadraticProblem, lambda: f64, opts: QuadOptions) -> Result<QuadSolution> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let m = problem.linear.len();
    let g = &problem.gram;
    let mut beta = vec![0.0; m];
    // Γ̂β, maintained incrementally.
    let mut gb = vec![0.0; m];
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..m {
            let gjj = g[[j, j]];
            let new = if gjj > 0.0 {
                let c = problem.linear[j] - (gb[j] - gjj * beta[j]);
                soft_threshold(c, lambda / 2.0) / gjj
            } else {
                0.0
            };
            let delta = new - beta[j];
            if delta != 0.0 {
                for k in 0..m {
                    gb[k] += g[[k, j]] * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        trace.push(problem.objective(&beta, lambda));
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(QuadSolution {
        beta,
        sweeps,
        converged,
        trace,
    })
}

fn expand_rows(basis: &Basis, rows: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((rows.nrows(), basis.dim()));
    let mut buf = Vec::new();
    for (r, mut o) in rows.rows().into_iter().zip(out.rows_mut()) {
        basis.expand_into(&r.to_vec(), &mut buf);
        o.assign(&Array1::from(buf.clone()));
    }
    out
}

/// Fits on joint rows `Z_i` and their cyclically permuted counterparts.
pub fn fit_penalized_quadratic(
    joint: &Array2<f64>,
    prod: &Array2<f64>,
    cfg: BasisConfig,
    lambda: f64,
    opts: QuadOptions,
) -> Result<QuadScoreModel> {
    if joint.nrows() != prod.nrows() {
        return Err(Error::LengthMismatch {
            left: joint.nrows(),
            right: prod.nrows(),
        });
    }
    if joint.ncols() != prod.ncols() {
        return Err(Error::DimensionMismatch {
            expected: joint.ncols(),
            got: prod.ncols(),
        });
    }
    let basis = Basis::new(joint.ncols(), cfg)?;
    let problem = QuadraticProblem::from_expanded(
        &expand_rows(&basis, joint),
        &expand_rows(&basis, prod),
        joint.nrows(),
    );
    let sol = solve(&problem, lambda, opts)?;
    Ok(QuadScoreModel {
        beta: sol.beta,
        basis: cfg,
        input_dim: joint.ncols(),
        lambda,
        sweeps: sol.sweeps,
        converged: sol.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, concatenate, Axis};
    use rand::Rng as _;

    fn random_rows(seed: u64, n: usize, d: usize) -> Array2<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_at_lambda_max() {
        let j = random_rows(1, 40, 3);
        let p = random_rows(2, 40, 3);
        let cfg = BasisConfig::new(1, 3);
        let basis = Basis::new(3, cfg).unwrap();
        let prob = QuadraticProblem::from_expanded(&expand_rows(&basis, &j), &expand_rows(&basis, &p), 40);
        let lm = prob.lambda_max();
        // Subgradient at zero: |−2γ̂_j| ≤ λ for every j.
        assert!(prob.linear.iter().all(|g| 2.0 * g.abs() <= lm + 1e-15));
        for lambda in [lm, 2.0 * lm, 8.0 * lm] {
            let m = fit_penalized_quadratic(&j, &p, cfg, lambda, Default::default()).unwrap();
            assert_eq!(m.nnz(), 0);
        }
        let m = fit_penalized_quadratic(&j, &p, cfg, 0.9 * lm, Default::default()).unwrap();
        assert!(m.nnz() > 0);
    }

    #[test]
    fn tiny_instance_matches_grid_search() {
        // n = 3 rows on each side, one coordinate, basis {t, t²}: m = 2.
        let j = array![[0.5], [-1.0], [0.8]];
        let p = array![[0.2], [0.9], [-0.4]];
        let lambda = 0.05;
        let cfg = BasisConfig::new(1, 2);
        let m = fit_penalized_quadratic(&j, &p, cfg, lambda, Default::default()).unwrap();
        let basis = Basis::new(1, cfg).unwrap();
        let prob = QuadraticProblem::from_expanded(&expand_rows(&basis, &j), &expand_rows(&basis, &p), 3);
        // Successively refined grid around the best point.
        let (mut c, mut width) = ([0.0, 0.0], 4.0);
        for _ in 0..40 {
            let mut best = (f64::INFINITY, c);
            for a in 0..=20 {
                for b in 0..=20 {
                    let cand = [
                        c[0] - width + width * a as f64 / 10.0,
                        c[1] - width + width * b as f64 / 10.0,
                    ];
                    let f = prob.objective(&cand, lambda);
                    if f < best.0 {
                        best = (f, cand);
                    }
                }
            }
            c = best.1;
            width *= 0.5;
        }
        assert!((m.beta[0] - c[0]).abs() < 1e-4 && (m.beta[1] - c[1]).abs() < 1e-4);
    }

    #[test]
    fn row_duplication_leaves_solution_unchanged() {
        let j = random_rows(3, 30, 2);
        let p = random_rows(4, 30, 2);
        let cfg = BasisConfig::new(2, 3);
        let a = fit_penalized_quadratic(&j, &p, cfg, 0.01, Default::default()).unwrap();
        let jj = concatenate(Axis(0), &[j.view(), j.view()]).unwrap();
        let pp = concatenate(Axis(0), &[p.view(), p.view()]).unwrap();
        let b = fit_penalized_quadratic(&jj, &pp, cfg, 0.01, Default::default()).unwrap();
        for (x, y) in a.beta.iter().zip(&b.beta) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn sweeps_do_not_increase_objective() {
        let j = random_rows(5, 50, 3);
        let p = random_rows(6, 50, 3);
        let basis = Basis::new(3, BasisConfig::new(2, 3)).unwrap();
        let prob = QuadraticProblem::from_expanded(&expand_rows(&basis, &j), &expand_rows(&basis, &p), 50);
        let sol = solve(&prob, 0.002, Default::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn ragged_inputs_rejected() {
        let cfg = BasisConfig::new(1, 2);
        assert!(fit_penalized_quadratic(&random_rows(0, 3, 2), &random_rows(1, 4, 2), cfg, 0.1, Default::default()).is_err());
    }
}
