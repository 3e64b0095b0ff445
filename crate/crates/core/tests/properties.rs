use cpc_core::data::{load_paired_csv, standardize, write_paired_csv, PairedSample};
use cpc_core::oracle;
use cpc_core::ranks::{ecdf, rank_sum_r, tie_break_uniforms, variance_hat, ScoredEvaluation};
use ndarray::Array2;
use proptest::collection::vec;
use proptest::prelude::*;

/// Scores on a coarse grid so that ties are common.
fn tied_scores(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec((1u32..8).prop_map(|k| k as f64 / 8.0), len)
}

fn paired(n2: std::ops::Range<usize>, ties: bool) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n2.prop_flat_map(move |n| {
        if ties {
            (tied_scores(n), tied_scores(n)).boxed()
        } else {
            (vec(0.0f64..1.0, n), vec(0.0f64..1.0, n)).boxed()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn merge_count_equals_double_loop((a, b) in paired(3..200, false), seed in any::<u64>()) {
        let e = ScoredEvaluation::new(a.clone(), b.clone()).unwrap();
        let (z, h) = tie_break_uniforms(a.len(), seed);
        prop_assert_eq!(rank_sum_r(&e, seed).unwrap().count, oracle::rank_sum_count(&a, &b, &z, &h));
    }

    #[test]
    fn merge_count_equals_double_loop_with_ties((a, b) in paired(3..200, true), seed in any::<u64>()) {
        let e = ScoredEvaluation::new(a.clone(), b.clone()).unwrap();
        let (z, h) = tie_break_uniforms(a.len(), seed);
        prop_assert_eq!(rank_sum_r(&e, seed).unwrap().count, oracle::rank_sum_count(&a, &b, &z, &h));
    }

    #[test]
    fn variance_matches_literal_formula((a, b) in paired(3..120, true)) {
        let e = ScoredEvaluation::new(a.clone(), b.clone()).unwrap();
        let v = variance_hat(&e).unwrap();
        prop_assert!((v.raw - oracle::variance_naive(&a, &b)).abs() <= 1e-15);
    }

    #[test]
    fn variance_never_exceeds_seven_sixths((a, b) in paired(3..60, false)) {
        let e = ScoredEvaluation::new(a, b).unwrap();
        prop_assert!(variance_hat(&e).unwrap().raw <= 7.0 / 6.0);
    }

    #[test]
    fn complement_identity_without_ties((a, b) in paired(3..100, false), seed in any::<u64>()) {
        let e = ScoredEvaluation::new(a, b).unwrap();
        let n = e.n2() as u64;
        let fwd = rank_sum_r(&e, seed).unwrap();
        let back = rank_sum_r(&e.swapped(), seed).unwrap();
        prop_assume!(fwd.tie_pairs == 0);
        prop_assert_eq!(fwd.count + back.count, n * n);
    }

    #[test]
    fn ecdf_is_monotone_step(values in vec(-5.0f64..5.0, 1..50), t in vec(-6.0f64..6.0, 2..20)) {
        let f = ecdf(&values).unwrap();
        let m = values.len() as f64;
        let mut ts = t.clone();
        ts.sort_by(f64::total_cmp);
        for w in ts.windows(2) {
            prop_assert!(f.eval(w[0]) <= f.eval(w[1]));
        }
        for &x in &ts {
            let v = f.eval(x) * m;
            prop_assert!((v - v.round()).abs() < 1e-9);
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(f.eval(max), 1.0);
    }

    #[test]
    fn standardize_keeps_shape(n in 4usize..30, d1 in 1usize..4, d2 in 1usize..4, seed in any::<u64>()) {
        use rand::Rng as _;
        let mut rng = cpc_core::rng::rng_from_seed(seed);
        let x = Array2::from_shape_fn((n, d1), |_| rng.random_range(-3.0..3.0));
        let y = Array2::from_shape_fn((n, d2), |_| rng.random_range(-3.0..3.0));
        let s = PairedSample::new(x, y).unwrap();
        let (t, _) = standardize(&s);
        prop_assert_eq!(t.x().dim(), s.x().dim());
        prop_assert_eq!(t.y().dim(), s.y().dim());
    }

    #[test]
    fn csv_round_trip_is_exact(vals in vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 12)) {
        let x = Array2::from_shape_vec((4, 2), vals[..8].to_vec()).unwrap();
        let y = Array2::from_shape_vec((4, 1), vals[8..].iter().take(4).copied().collect()).unwrap();
        let s = PairedSample::new(x, y).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_paired_csv(&s, &p, &["a", "b"], &["c"]).unwrap();
        let back = load_paired_csv(&p, &["a", "b"], &["c"]).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn all_tied_scores_average_one_half() {
    let e = ScoredEvaluation::new(vec![0.5; 40], vec![0.5; 40]).unwrap();
    let reps = 1000;
    let mean = (0..reps).map(|s| rank_sum_r(&e, s).unwrap().r).sum::<f64>() / reps as f64;
    assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
}
