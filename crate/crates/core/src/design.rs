//! Feature matrices consumed by the classifiers.

use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as (column, value) pairs with ascending columns.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (c, v) in entries {
            debug_assert!(c < self.n_cols);
            self.indices.push(c as u32);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(c, v)| (*c as usize, *v))
    }
}

/// A row-major feature table, dense or sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(Array2<f64>),
    Sparse(CsrMatrix),
}

impl Design {
    pub fn n_rows(&self) -> usize {
        match self {
            Design::Dense(a) => a.nrows(),
            Design::Sparse(m) => m.n_rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Design::Dense(a) => a.ncols(),
            Design::Sparse(m) => m.n_cols(),
        }
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        match self {
            Design::Dense(a) => a.row(i).to_vec(),
            Design::Sparse(m) => {
                let mut out = vec![0.0; m.n_cols()];
                for (c, v) in m.row(i) {
                    out[c] = v;
                }
                out
            }
        }
    }

    /// Calls `f(column, value)` for every stored entry of row `i`.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            Design::Dense(a) => a.row(i).iter().enumerate().for_each(|(c, v)| f(c, *v)),
            Design::Sparse(m) => m.row(i).for_each(|(c, v)| f(c, v)),
        }
    }

    /// `self · w`.
    pub fn matvec(&self, w: &[f64]) -> Vec<f64> {
        match self {
            Design::Dense(a) => a.dot(&Array1::from(w.to_vec())).to_vec(),
            Design::Sparse(m) => (0..m.n_rows())
                .map(|i| m.row(i).map(|(c, v)| v * w[c]).sum())
                .collect(),
        }
    }

    /// `selfᵀ · r`.
    pub fn t_matvec(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Design::Dense(a) => a.t().dot(&Array1::from(r.to_vec())).to_vec(),
            Design::Sparse(m) => {
                let mut out = vec![0.0; m.n_cols()];
                for (i, ri) in r.iter().enumerate() {
                    for (c, v) in m.row(i) {
                        out[c] += v * ri;
                    }
                }
                out
            }
        }
    }

    /// `self[rows, :] · w` for a (n_cols × k) weight matrix.
    pub fn rows_matmul(&self, rows: &[usize], w: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            Design::Dense(a) => a.select(Axis(0), rows).dot(&w),
            Design::Sparse(m) => {
                let mut out = Array2::zeros((rows.len(), w.ncols()));
                for (o, &i) in rows.iter().enumerate() {
                    let mut orow = out.row_mut(o);
                    for (c, v) in m.row(i) {
                        orow.scaled_add(v, &w.row(c));
                    }
                }
                out
            }
        }
    }

    /// `self[rows, :]ᵀ · g` for a (rows.len() × k) matrix `g`.
    pub fn rows_t_matmul(&self, rows: &[usize], g: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            Design::Dense(a) => a.select(Axis(0), rows).t().dot(&g),
            Design::Sparse(m) => {
                let mut out = Array2::zeros((m.n_cols(), g.ncols()));
                for (o, &i) in rows.iter().enumerate() {
                    let grow = g.row(o);
                    for (c, v) in m.row(i) {
                        out.row_mut(c).scaled_add(v, &grow);
                    }
                }
                out
            }
        }
    }

    /// Stacks two designs of equal width vertically.
    pub fn vstack(top: &Design, bottom: &Design) -> Design {
        assert_eq!(top.n_cols(), bottom.n_cols(), "vstack width mismatch");
        match (top, bottom) {
            (Design::Dense(a), Design::Dense(b)) => {
                Design::Dense(ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("same width"))
            }
            _ => {
                let mut m = CsrMatrix::new(top.n_cols());
                for d in [top, bottom] {
                    for i in 0..d.n_rows() {
                        let mut row = Vec::new();
                        d.for_each_in_row(i, |c, v| {
                            if v != 0.0 {
                                row.push((c, v))
                            }
                        });
                        m.push_row(row);
                    }
                }
                Design::Sparse(m)
            }
        }
    }
}
