//! Behaviour of the building blocks under independence.

use cpc_core::data::PairedSample;
use cpc_core::design::Design;
use cpc_core::ranks::{ecdf, rank_sum_r, ScoredEvaluation};
use cpc_core::rng::rng_from_seed;
use cpc_core::split::{build_training_sets, split_indices};
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

fn normal_sample(n: usize, d: usize, seed: u64) -> PairedSample {
    let mut rng = rng_from_seed(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let y = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    PairedSample::new(x, y).unwrap()
}

fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let fa = ecdf(a).unwrap();
    let fb = ecdf(b).unwrap();
    a.iter()
        .chain(b)
        .map(|&t| (fa.eval(t) - fb.eval(t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn training_labels_share_marginals() {
    let mut ok = 0;
    for rep in 0..200 {
        let s = normal_sample(200, 2, rep);
        let plan = split_indices(200, rep).unwrap();
        let (train, _) = build_training_sets(&s, &plan).unwrap();
        let Design::Dense(t) = &train.design else { unreachable!() };
        let m = plan.i1.len();
        let crit = 1.628 * ((2 * m) as f64 / (m * m) as f64).sqrt();
        let all_below = (0..t.ncols()).all(|c| {
            let col = t.column(c).to_vec();
            ks_two_sample(&col[..m], &col[m..]) < crit
        });
        ok += all_below as usize;
    }
    assert!(ok >= 190, "{ok} of 200");
}

/// Median |(R − ½) − R̃| over replications for a fixed score function, with
/// the projection `R̃` built from the population score distribution.
fn median_projection_gap(n2: usize, reps: u64, reference: &[f64]) -> f64 {
    let f = ecdf(reference).unwrap();
    let score = |x: f64, y: f64, z: f64| 1.0 / (1.0 + (-(x * y + 0.3 * z)).exp());
    let mut gaps: Vec<f64> = (0..reps)
        .map(|rep| {
            let mut rng = rng_from_seed(10_000 + rep);
            let mut draw = || rng.sample::<f64, _>(StandardNormal);
            let rows: Vec<(f64, f64, f64)> = (0..n2).map(|_| (draw(), draw(), draw())).collect();
            let joint: Vec<f64> = rows.iter().map(|r| score(r.0, r.1, r.2)).collect();
            let prod: Vec<f64> = (0..n2)
                .map(|i| {
                    let nx = &rows[(i + 1) % n2];
                    score(rows[i].0, nx.1, rows[i].2)
                })
                .collect();
            let e = ScoredEvaluation::new(joint.clone(), prod.clone()).unwrap();
            let r = rank_sum_r(&e, rep).unwrap().r;
            let proj = joint.iter().map(|&a| 0.5 - f.eval(a)).sum::<f64>() / n2 as f64
                + prod.iter().map(|&b| f.eval(b) - 0.5).sum::<f64>() / n2 as f64;
            ((r - 0.5) - proj).abs()
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

#[test]
fn projection_remainder_shrinks_like_one_over_n() {
    let mut rng = rng_from_seed(77);
    let mut draw = || rng.sample::<f64, _>(StandardNormal);
    let reference: Vec<f64> = (0..400_000)
        .map(|_| {
            let (x, y, z) = (draw(), draw(), draw());
            1.0 / (1.0 + (-(x * y + 0.3 * z)).exp())
        })
        .collect();
    let small = median_projection_gap(200, 300, &reference);
    let large = median_projection_gap(800, 300, &reference);
    assert!(large < 0.5 * small, "gap {large} at 800 vs {small} at 200");
}
