use cpc_core::classifiers::{predict_scores, ClassifierConfig, ScoreModel};
use cpc_core::cpc::{cpc_run, score_evaluation};
use cpc_core::data::{PairedSample, SparseColumnMatrix, SparsePairedSample};
use cpc_core::ranks::{rank_sum_r, variance_hat};
use cpc_core::rng::rng_from_seed;
use cpc_core::split::{build_training_sets, split_indices};
use cpc_core::{cpc_test, cpc_test_rows, CpcConfig};
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// `y_1 = a x_1 + ε`, all other coordinates pure noise.
fn linear_sample(n: usize, d: usize, a: f64, seed: u64) -> PairedSample {
    let mut rng = rng_from_seed(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let mut y = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    for i in 0..n {
        y[[i, 0]] += a * x[[i, 0]];
    }
    PairedSample::new(x, y).unwrap()
}

#[test]
fn identical_runs_give_identical_json() {
    let s = linear_sample(200, 3, 0.5, 1);
    for cfg in [ClassifierConfig::logistic(), ClassifierConfig::mlp(), ClassifierConfig::quadratic()] {
        let c = CpcConfig::new(cfg);
        let a = serde_json::to_string(&cpc_test(&s, &c, 7).unwrap()).unwrap();
        let b = serde_json::to_string(&cpc_test(&s, &c, 7).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn report_has_fixed_keys() {
    let s = linear_sample(100, 2, 0.0, 2);
    let r = cpc_test(&s, &CpcConfig::new(ClassifierConfig::logistic()), 3).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in ["R", "sigma_hat_sq", "statistic", "p_value", "tie_count", "variance_floored", "seed", "classifier"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["classifier"]["kind"], "logistic");
    assert!(r.sigma_hat_sq_raw <= 7.0 / 6.0);
    assert!((0.0..=1.0).contains(&r.p_value));
}

#[test]
fn monotone_transform_of_scores_keeps_statistic() {
    let s = linear_sample(300, 2, 0.7, 4);
    let run = cpc_run(&s, &ClassifierConfig::logistic(), 11).unwrap();
    let base = rank_sum_r(&run.scores, run.report.tie_seed).unwrap();
    for g in [f64::exp as fn(f64) -> f64, |t| 3.0 * t + 1.0] {
        let mapped = run.scores.map(g).unwrap();
        assert_eq!(rank_sum_r(&mapped, run.report.tie_seed).unwrap(), base);
        assert_eq!(variance_hat(&mapped).unwrap(), variance_hat(&run.scores).unwrap());
    }
}

#[test]
fn sparse_path_matches_dense_path() {
    let mut rng = rng_from_seed(5);
    let n = 120;
    let mut xt = Vec::new();
    let mut yt = Vec::new();
    for i in 0..n {
        for c in 0..4 {
            if rng.random::<f64>() < 0.3 {
                let v: f64 = rng.random_range(1.0..5.0);
                xt.push((i, c, v));
                if c == 0 {
                    yt.push((i, 0, v + rng.random::<f64>()));
                }
            }
        }
        if rng.random::<f64>() < 0.3 {
            yt.push((i, 1, rng.random_range(1.0..5.0)));
        }
    }
    let xs = SparseColumnMatrix::from_triplets(n, 4, xt).unwrap();
    let ys = SparseColumnMatrix::from_triplets(n, 2, yt).unwrap();
    let sparse = SparsePairedSample::new(xs, ys).unwrap();
    let dense = sparse.to_dense().unwrap();
    let cfg = ClassifierConfig::logistic();
    let a = cpc_test_rows(&sparse, &cfg, 9).unwrap();
    let b = cpc_test(&dense, &CpcConfig::new(cfg).with_standardize(false), 9).unwrap();
    assert!((a.r - b.r).abs() < 1e-12);
    assert!((a.statistic - b.statistic).abs() < 1e-6);
}

#[test]
fn fixed_model_scores_follow_evaluation_order() {
    let s = linear_sample(60, 2, 1.0, 6);
    let plan = split_indices(s.x().nrows(), 3).unwrap();
    let (train, eval) = build_training_sets(&s, &plan).unwrap();
    let model = ClassifierConfig::logistic().fit(&train, 2, 0).unwrap();
    let scored = score_evaluation(&model, &eval).unwrap();
    assert_eq!(scored.s_joint(), predict_scores(&model, &eval.joint).unwrap());
    let i = plan.i2[0];
    let direct = model
        .score(&s.x().row(i).to_vec(), &s.y().row(i).to_vec())
        .unwrap();
    assert_eq!(scored.s_joint()[0], direct);
}

#[test]
fn detects_linear_signal_in_low_dimension() {
    // a = 1, d1 = d2 = 10, n = 1000, default network: nearly always rejects.
    let reps = 100;
    let mut rejected = 0;
    let cfg = CpcConfig::default();
    for rep in 0..reps {
        let s = linear_sample(1000, 10, 1.0, 1000 + rep);
        if cpc_test(&s, &cfg, rep).unwrap().p_value < 0.05 {
            rejected += 1;
        }
    }
    assert!(rejected >= 95, "rejected {rejected} of {reps}");
}
