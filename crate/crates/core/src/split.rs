//! Sample split and within-half cyclic permutation.
//!
//! The index set is shuffled with a seeded RNG and cut into a training half
//! `i1` (size ⌈n/2⌉) and an evaluation half `i2` (size ⌊n/2⌋). Inside each
//! half, with indices `(i_1, …, i_m)` in plan order, the permuted sample pairs
//! `x_{i_k}` with `y_{i_{k+1}}` and wraps `x_{i_m}` with `y_{i_1}`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::PairedRows;
use crate::design::{CsrMatrix, Design};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const MIN_SPLIT_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    pub fn n(&self) -> usize {
        self.i1.len() + self.i2.len()
    }

    /// Checks that the plan partitions `0..n` and both halves support a cycle.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::InvalidIndices(format!(
                "plan covers {} indices, sample has {n}",
                self.n()
            )));
        }
        let mut seen = vec![false; n];
        for &i in self.i1.iter().chain(&self.i2) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidIndices(format!("index {i} repeated or out of range")));
            }
        }
        for half in [&self.i1, &self.i2] {
            if half.len() < 3 {
                return Err(Error::DegeneratePairing(half.len()));
            }
        }
        Ok(())
    }
}

/// Uniformly random equal split of `0..n`, deterministic in `(n, seed)`.
pub fn split_indices(n: usize, seed: u64) -> Result<SplitPlan> {
    if n < MIN_SPLIT_N {
        return Err(Error::SampleTooSmall { n, min: MIN_SPLIT_N });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let i2 = idx.split_off(n.div_ceil(2));
    Ok(SplitPlan { i1: idx, i2, seed })
}

/// Successor position in a cycle of length `m`.
#[inline]
pub fn next_position(k: usize, m: usize) -> usize {
    if k + 1 == m {
        0
    } else {
        k + 1
    }
}

/// `(x_index, y_index)` provenance of each cyclically permuted row.
pub fn cyclic_pairs(indices: &[usize]) -> Result<Vec<(usize, usize)>> {
    let m = indices.len();
    if m < 3 {
        return Err(Error::DegeneratePairing(m));
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidIndices("indices must be distinct".into()));
    }
    Ok((0..m)
        .map(|k| (indices[k], indices[next_position(k, m)]))
        .collect())
}

fn check_range(indices: &[usize], n: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= n) {
        Some(bad) => Err(Error::InvalidIndices(format!("index {bad} out of range for n = {n}"))),
        None => Ok(()),
    }
}

/// Dense permuted rows `(x_{indices[k]}, y_{indices[k+1 mod m]})`.
pub fn cyclic_permute<P: PairedRows + ?Sized>(
    sample: &P,
    indices: &[usize],
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    check_range(indices, sample.n())?;
    Ok(cyclic_pairs(indices)?
        .into_iter()
        .map(|(xi, yi)| (sample.dense_x_row(xi), sample.dense_y_row(yi)))
        .collect())
}

/// Training rows over `i1`: the original pairs (label 1) followed by their
/// cyclically permuted versions (label 0).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub design: Design,
    pub labels: Vec<f64>,
}

impl LabeledTable {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1.0).count()
    }

    /// Errors unless both labels occur.
    pub fn require_two_classes(&self) -> Result<()> {
        let pos = self.n_positive();
        if pos == 0 || pos == self.n_rows() {
            Err(Error::SingleClassInput)
        } else {
            Ok(())
        }
    }

    pub fn label_mean(&self) -> f64 {
        self.n_positive() as f64 / self.n_rows() as f64
    }
}

/// Evaluation rows over `i2`, both tables in plan order. Row `k` of `prod` is
/// `(x_{i2[k]}, y_{i2[k+1]})`, so it shares its x with `joint` row `k` and its
/// y with `joint` row `k+1` (cyclically).
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTable {
    pub joint: Design,
    pub prod: Design,
    pub indices: Vec<usize>,
}

fn build_design<P: PairedRows + ?Sized>(sample: &P, pairs: &[(usize, usize)]) -> Design {
    let (d1, d) = (sample.d1(), sample.d1() + sample.d2());
    if sample.is_sparse() {
        let mut m = CsrMatrix::new(d);
        for &(xi, yi) in pairs {
            let xs = sample.x_entries(xi);
            let ys = sample.y_entries(yi);
            m.push_row(xs.into_iter().chain(ys.into_iter().map(|(c, v)| (d1 + c, v))));
        }
        Design::Sparse(m)
    } else {
        let mut a = Array2::zeros((pairs.len(), d));
        for (mut row, &(xi, yi)) in a.rows_mut().into_iter().zip(pairs) {
            sample.write_dense_pair(xi, yi, row.as_slice_mut().expect("standard layout"));
        }
        Design::Dense(a)
    }
}

/// Original pairs over `i1` labeled 1, then their cyclic permutation labeled 0.
pub fn build_training_table<P: PairedRows + ?Sized>(sample: &P, i1: &[usize]) -> Result<LabeledTable> {
    check_range(i1, sample.n())?;
    let mut pairs: Vec<(usize, usize)> = i1.iter().map(|&i| (i, i)).collect();
    pairs.extend(cyclic_pairs(i1)?);
    let mut labels = vec![1.0; i1.len()];
    labels.resize(2 * i1.len(), 0.0);
    Ok(LabeledTable {
        design: build_design(sample, &pairs),
        labels,
    })
}

pub fn build_evaluation_table<P: PairedRows + ?Sized>(sample: &P, i2: &[usize]) -> Result<EvaluationTable> {
    check_range(i2, sample.n())?;
    let joint_pairs: Vec<(usize, usize)> = i2.iter().map(|&i| (i, i)).collect();
    let prod_pairs = cyclic_pairs(i2)?;
    Ok(EvaluationTable {
        joint: build_design(sample, &joint_pairs),
        prod: build_design(sample, &prod_pairs),
        indices: i2.to_vec(),
    })
}

pub fn build_training_sets<P: PairedRows + ?Sized>(
    sample: &P,
    plan: &SplitPlan,
) -> Result<(LabeledTable, EvaluationTable)> {
    plan.validate(sample.n())?;
    Ok((
        build_training_table(sample, &plan.i1)?,
        build_evaluation_table(sample, &plan.i2)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PairedSample;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn ramp(n: usize) -> PairedSample {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (10 * i + j) as f64);
        let y = Array2::from_shape_fn((n, 1), |(i, _)| -(i as f64) - 0.5);
        PairedSample::new(x, y).unwrap()
    }

    #[test]
    fn split_is_deterministic() {
        assert_eq!(split_indices(10, 7).unwrap(), split_indices(10, 7).unwrap());
        assert_ne!(split_indices(10, 7).unwrap(), split_indices(10, 8).unwrap());
    }

    #[test]
    fn odd_n_gives_extra_point_to_training() {
        let p = split_indices(9, 1).unwrap();
        assert_eq!((p.i1.len(), p.i2.len()), (5, 4));
    }

    #[test]
    fn small_n_rejected() {
        assert!(matches!(split_indices(6, 0), Err(Error::SampleTooSmall { n: 6, .. })));
    }

    #[test]
    fn cyclic_definition_unrolled() {
        let s = ramp(4);
        let rows = cyclic_permute(&s, &[0, 1, 2]).unwrap();
        assert_eq!(rows[0], (s.dense_x_row(0), s.dense_y_row(1)));
        assert_eq!(rows[1], (s.dense_x_row(1), s.dense_y_row(2)));
        assert_eq!(rows[2], (s.dense_x_row(2), s.dense_y_row(0)));
    }

    #[test]
    fn identical_rows_are_fixed_by_permutation() {
        let s = PairedSample::new(Array2::from_elem((5, 2), 1.5), Array2::from_elem((5, 3), -2.0))
            .unwrap();
        for (x, y) in cyclic_permute(&s, &[4, 0, 2, 1]).unwrap() {
            assert_eq!(x, s.dense_x_row(0));
            assert_eq!(y, s.dense_y_row(0));
        }
    }

    #[test]
    fn short_pairing_is_degenerate() {
        assert!(matches!(cyclic_pairs(&[3, 1]), Err(Error::DegeneratePairing(2))));
        assert!(matches!(cyclic_pairs(&[3, 1, 3]), Err(Error::InvalidIndices(_))));
    }

    #[test]
    fn training_table_counts_and_shared_x() {
        let s = ramp(8);
        let plan = split_indices(8, 3).unwrap();
        let (train, eval) = build_training_sets(&s, &plan).unwrap();
        assert_eq!(train.n_rows(), 8);
        assert_eq!(train.n_positive(), 4);
        let (Design::Dense(j), Design::Dense(p)) = (&eval.joint, &eval.prod) else {
            panic!("dense sample must give dense tables");
        };
        // x parts coincide; y of prod row k equals y of joint row k+1.
        let m = j.nrows();
        for k in 0..m {
            assert_eq!(j.row(k).slice(ndarray::s![..2]), p.row(k).slice(ndarray::s![..2]));
            assert_eq!(j[[next_position(k, m), 2]], p[[k, 2]]);
        }
    }

    #[test]
    fn permutation_is_a_single_cycle() {
        let idx = [5usize, 2, 9, 0, 7, 3];
        let pairs = cyclic_pairs(&idx).unwrap();
        let next: std::collections::HashMap<usize, usize> = pairs.iter().copied().collect();
        for &start in &idx {
            let mut cur = start;
            for step in 1..=idx.len() {
                cur = next[&cur];
                assert_eq!(cur == start, step == idx.len());
            }
        }
    }

    #[test]
    fn provenance_touches_only_neighbors() {
        let idx = [4usize, 1, 6, 0, 3];
        let pairs = cyclic_pairs(&idx).unwrap();
        for (k, &(xi, yi)) in pairs.iter().enumerate() {
            assert_eq!(xi, idx[k]);
            assert_eq!(yi, idx[(k + 1) % idx.len()]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn split_partitions_index_set(n in 8usize..1_000_000, seed in any::<u64>()) {
            let plan = split_indices(n, seed).unwrap();
            prop_assert_eq!(plan.i1.len(), n.div_ceil(2));
            prop_assert_eq!(plan.i2.len(), n / 2);
            prop_assert!(plan.validate(n).is_ok());
        }
    }
}
