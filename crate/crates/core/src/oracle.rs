//! Slow reference implementations used to cross-check the fast paths.

/// `Σ_{i,j} [1{a_i < b_j} + 1{ζ_i < η_j} 1{a_i = b_j}]` by double loop.
pub fn rank_sum_count(a: &[f64], b: &[f64], zeta: &[f64], eta: &[f64]) -> u64 {
    let mut c = 0u64;
    for i in 0..a.len() {
        for j in 0..b.len() {
            if a[i] < b[j] || (a[i] == b[j] && zeta[i] < eta[j]) {
                c += 1;
            }
        }
    }
    c
}

/// The plug-in variance evaluated literally, ECDF by counting.
pub fn variance_naive(s_joint: &[f64], s_prod: &[f64]) -> f64 {
    let n = s_prod.len();
    let f = |t: f64| s_prod.iter().filter(|&&v| v <= t).count() as f64 / n as f64;
    let h: Vec<f64> = s_joint.iter().map(|&s| 0.5 - f(s)).collect();
    let hp: Vec<f64> = s_prod.iter().map(|&s| 0.5 - f(s)).collect();
    let mut same = 0.0;
    let mut shifted = 0.0;
    for i in 0..n {
        same += h[i] * hp[i];
        shifted += h[(i + 1) % n] * hp[i];
    }
    let nf = n as f64;
    1.0 / 6.0 - 2.0 / nf * same - 2.0 / nf * shifted
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            p[k] = x[k] + h;
            let up = f(&p);
            p[k] = x[k] - h;
            let down = f(&p);
            p[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(floor)
}

/// Squared distance covariance from the textbook double-centering formula,
/// written independently of the production kernel.
pub fn dcov_sq_direct(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    fn centered(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = rows.len();
        let d = |i: usize, j: usize| {
            rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let dm: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d(i, j)).collect()).collect();
        let row_mean: Vec<f64> = dm.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
        let col_mean: Vec<f64> = (0..n)
            .map(|j| dm.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let grand = row_mean.iter().sum::<f64>() / n as f64;
        (0..n)
            .map(|i| (0..n).map(|j| dm[i][j] - row_mean[i] - col_mean[j] + grand).collect())
            .collect()
    }
    let a = centered(x);
    let b = centered(y);
    let n = x.len() as f64;
    let mut s = 0.0;
    for (ra, rb) in a.iter().zip(&b) {
        for (u, v) in ra.iter().zip(rb) {
            s += u * v;
        }
    }
    s / (n * n)
}
