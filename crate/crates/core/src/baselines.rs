//! Distance correlation and permutation calibration.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_PERMUTATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcorResult {
    pub dcov_sq: f64,
    pub dcor: f64,
    pub p_value: Option<f64>,
}

/// Double-centered Euclidean distance matrix of the rows of `x`.
pub fn centered_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        for j in i + 1..n {
            let s: f64 = xi.iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = s.sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    let row_mean = d.mean_axis(Axis(1)).expect("n >= 1");
    let grand = row_mean.mean().expect("n >= 1");
    for i in 0..n {
        for j in 0..n {
            // Symmetric, so column means equal row means.
            d[[i, j]] += grand - row_mean[i] - row_mean[j];
        }
    }
    d
}

/// `mean(A ∘ B)`.
fn mean_product(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.nrows() as f64;
    a.iter().zip(b.iter()).map(|(u, v)| u * v).sum::<f64>() / (n * n)
}

/// `mean(A_ij · B_{π(i) π(j)})`.
fn mean_product_permuted(a: &Array2<f64>, b: &Array2<f64>, perm: &[usize]) -> f64 {
    let n = perm.len();
    let mut s = 0.0;
    for i in 0..n {
        let ar = a.row(i);
        let br = b.row(perm[i]);
        for j in 0..n {
            s += ar[j] * br[perm[j]];
        }
    }
    s / (n * n) as f64
}

fn check_rows(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.nrows(),
        });
    }
    if x.nrows() < 2 {
        return Err(Error::SampleTooSmall { n: x.nrows(), min: 2 });
    }
    Ok(())
}

fn dcor_from(dxy: f64, dxx: f64, dyy: f64) -> f64 {
    let denom = (dxx * dyy).sqrt();
    if denom <= 0.0 {
        0.0
    } else {
        (dxy.max(0.0) / denom).sqrt()
    }
}

/// Sample (V-statistic) distance covariance and correlation.
pub fn distance_correlation(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<DcorResult> {
    check_rows(x, y)?;
    let a = centered_distances(x);
    let b = centered_distances(y);
    let dxy = mean_product(&a, &b);
    Ok(DcorResult {
        dcov_sq: dxy,
        dcor: dcor_from(dxy, mean_product(&a, &a), mean_product(&b, &b)),
        p_value: None,
    })
}

/// Seeded uniform permutation for replicate `b`.
pub fn replicate_permutation(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng_from_seed(derive_seed(&[seed, b as u64])));
    p
}

/// `(1 + #{b : stat(x, π_b y) ≥ stat(x, y)}) / (B + 1)` for any statistic.
pub fn permutation_pvalue<F>(
    stat: F,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    permutations: usize,
    seed: u64,
) -> Result<f64>
where
    F: Fn(ArrayView2<'_, f64>, ArrayView2<'_, f64>) -> Result<f64>,
{
    if permutations == 0 {
        return Err(Error::InvalidParameter("permutation count must be >= 1".into()));
    }
    check_rows(x, y)?;
    let observed = stat(x, y)?;
    let mut exceed = 0usize;
    for b in 0..permutations {
        let perm = replicate_permutation(y.nrows(), seed, b);
        let yp = y.select(Axis(0), &perm);
        if stat(x, yp.view())? >= observed {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (permutations + 1) as f64)
}

/// Distance correlation with a permutation p-value. Reuses the centered
/// matrices across replicates: permuting `y` permutes rows and columns of `B`.
pub fn dcor_test(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    permutations: usize,
    seed: u64,
) -> Result<DcorResult> {
    if permutations == 0 {
        return Err(Error::InvalidParameter("permutation count must be >= 1".into()));
    }
    check_rows(x, y)?;
    let a = centered_distances(x);
    let b = centered_distances(y);
    let observed = mean_product(&a, &b);
    let exceed = (0..permutations)
        .filter(|&r| mean_product_permuted(&a, &b, &replicate_permutation(y.nrows(), seed, r)) >= observed)
        .count();
    Ok(DcorResult {
        dcov_sq: observed,
        dcor: dcor_from(observed, mean_product(&a, &a), mean_product(&b, &b)),
        p_value: Some((1 + exceed) as f64 / (permutations + 1) as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcorReport {
    pub method: String,
    pub dcov_sq: f64,
    pub dcor: f64,
    pub p_value: Option<f64>,
    pub permutations: usize,
    pub seed: u64,
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
}

impl DcorReport {
    pub fn new(res: DcorResult, permutations: usize, seed: u64, n: usize, d1: usize, d2: usize) -> Self {
        Self {
            method: "dcor".into(),
            dcov_sq: res.dcov_sq,
            dcor: res.dcor,
            p_value: res.p_value,
            permutations,
            seed,
            n,
            d1,
            d2,
        }
    }
}
