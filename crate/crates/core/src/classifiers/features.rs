//! Feature maps applied to concatenated `(x, y)` rows before a linear model.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::design::{CsrMatrix, Design};

/// How a linear score model sees a row `(x, y)`.
///
/// A linear function of `(x, y)` alone cannot separate a sample from its
/// cyclic permutation: both share every column marginal, so the logistic
/// gradient at zero vanishes identically. `CrossProducts` appends every
/// `x_j · y_k`, which carries the dependence signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMap {
    Identity,
    #[default]
    CrossProducts,
}

impl FeatureMap {
    pub fn output_dim(self, d1: usize, d2: usize) -> usize {
        match self {
            FeatureMap::Identity => d1 + d2,
            FeatureMap::CrossProducts => d1 + d2 + d1 * d2,
        }
    }

    /// Maps each row of `design`, whose first `d1` columns are `x`.
    pub fn apply(self, design: &Design, d1: usize) -> Design {
        let d = design.n_cols();
        let d2 = d - d1;
        match self {
            FeatureMap::Identity => design.clone(),
            FeatureMap::CrossProducts => match design {
                Design::Dense(a) => {
                    let p = self.output_dim(d1, d2);
                    let mut out = Array2::zeros((a.nrows(), p));
                    for (row, mut o) in a.rows().into_iter().zip(out.rows_mut()) {
                        for c in 0..d {
                            o[c] = row[c];
                        }
                        for j in 0..d1 {
                            for k in 0..d2 {
                                o[d + j * d2 + k] = row[j] * row[d1 + k];
                            }
                        }
                    }
                    Design::Dense(out)
                }
                Design::Sparse(m) => {
                    let mut out = CsrMatrix::new(self.output_dim(d1, d2));
                    for i in 0..m.n_rows() {
                        let entries: Vec<(usize, f64)> = m.row(i).collect();
                        let split = entries.partition_point(|e| e.0 < d1);
                        let (xs, ys) = entries.split_at(split);
                        let mut row = entries.clone();
                        for &(j, xv) in xs {
                            for &(c, yv) in ys {
                                row.push((d + j * d2 + (c - d1), xv * yv));
                            }
                        }
                        out.push_row(row);
                    }
                    Design::Sparse(out)
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cross_products_layout() {
        let a = Design::Dense(array![[1.0, 2.0, 3.0, 5.0]]);
        let Design::Dense(out) = FeatureMap::CrossProducts.apply(&a, 2) else {
            unreachable!()
        };
        assert_eq!(out.row(0).to_vec(), vec![1.0, 2.0, 3.0, 5.0, 3.0, 5.0, 6.0, 10.0]);
    }

    #[test]
    fn sparse_matches_dense() {
        let dense = array![[0.0, 2.0, 3.0, 0.0, 1.5], [1.0, 0.0, 0.0, -2.0, 0.0]];
        let mut csr = CsrMatrix::new(5);
        for r in dense.rows() {
            csr.push_row(r.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(c, v)| (c, *v)));
        }
        let a = FeatureMap::CrossProducts.apply(&Design::Dense(dense), 2);
        let b = FeatureMap::CrossProducts.apply(&Design::Sparse(csr), 2);
        for i in 0..2 {
            assert_eq!(a.dense_row(i), b.dense_row(i));
        }
    }
}
