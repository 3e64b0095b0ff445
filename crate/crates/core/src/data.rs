//! Paired samples, ingestion and column standardization.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest row count accepted for a [`PairedSample`].
pub const MIN_SAMPLE_ROWS: usize = 4;

/// Row access shared by dense and sparse paired data.
///
/// Rows are addressed separately for the x and y blocks so that a caller can
/// assemble `(x_i, y_j)` pairs with `i != j`, which is how cyclically permuted
/// rows are built.
pub trait PairedRows {
    fn n(&self) -> usize;
    fn d1(&self) -> usize;
    fn d2(&self) -> usize;

    /// Nonzero (index, value) entries of `x_i`, indices ascending.
    fn x_entries(&self, i: usize) -> Vec<(usize, f64)>;
    fn y_entries(&self, i: usize) -> Vec<(usize, f64)>;

    /// Whether downstream tables should keep a sparse layout.
    fn is_sparse(&self) -> bool {
        false
    }

    /// Writes the dense concatenation `(x_xi, y_yi)` into `out`.
    fn write_dense_pair(&self, xi: usize, yi: usize, out: &mut [f64]) {
        let d1 = self.d1();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, v) in self.x_entries(xi) {
            out[j] = v;
        }
        for (j, v) in self.y_entries(yi) {
            out[d1 + j] = v;
        }
    }

    fn dense_x_row(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.d1()];
        for (j, v) in self.x_entries(i) {
            row[j] = v;
        }
        row
    }

    fn dense_y_row(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.d2()];
        for (j, v) in self.y_entries(i) {
            row[j] = v;
        }
        row
    }
}

/// `n` observations of `(x, y)` with `x` in R^d1 and `y` in R^d2.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl PairedSample {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::RowCountMismatch {
                x_rows: x.nrows(),
                y_rows: y.nrows(),
            });
        }
        if x.nrows() < MIN_SAMPLE_ROWS {
            return Err(Error::SampleTooSmall {
                n: x.nrows(),
                min: MIN_SAMPLE_ROWS,
            });
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::EmptySelection);
        }
        for (block, name) in [(&x, "x"), (&y, "y")] {
            if let Some(((r, c), v)) = block.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Parse {
                    row: r + 1,
                    col: format!("{name}[{c}]"),
                    msg: format!("non-finite value {v}"),
                });
            }
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.x, self.y)
    }
}

impl PairedRows for PairedSample {
    fn n(&self) -> usize {
        self.x.nrows()
    }

    fn d1(&self) -> usize {
        self.x.ncols()
    }

    fn d2(&self) -> usize {
        self.y.ncols()
    }

    fn x_entries(&self, i: usize) -> Vec<(usize, f64)> {
        nonzero_entries(self.x.row(i))
    }

    fn y_entries(&self, i: usize) -> Vec<(usize, f64)> {
        nonzero_entries(self.y.row(i))
    }

    fn write_dense_pair(&self, xi: usize, yi: usize, out: &mut [f64]) {
        let d1 = self.x.ncols();
        for (o, v) in out[..d1].iter_mut().zip(self.x.row(xi)) {
            *o = *v;
        }
        for (o, v) in out[d1..].iter_mut().zip(self.y.row(yi)) {
            *o = *v;
        }
    }

    fn dense_x_row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).to_vec()
    }

    fn dense_y_row(&self, i: usize) -> Vec<f64> {
        self.y.row(i).to_vec()
    }
}

fn nonzero_entries(row: ArrayView1<'_, f64>) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, *v))
        .collect()
}

/// Column-oriented sparse matrix; absent entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumnMatrix {
    n_rows: usize,
    n_cols: usize,
    /// `columns[c]` holds `(row, value)` with strictly increasing rows.
    columns: Vec<Vec<(u32, f64)>>,
    /// Row-major mirror of the same entries, for row iteration.
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseColumnMatrix {
    /// Builds from 0-based triplets. Zero values are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_cols];
        for (r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfBounds {
                    row: r + 1,
                    col: c + 1,
                    n_rows,
                    n_cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 1,
                    col: (c + 1).to_string(),
                    msg: format!("non-finite value {v}"),
                });
            }
            columns[c].push((r as u32, v));
        }
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_rows];
        for (c, col) in columns.iter_mut().enumerate() {
            col.sort_by_key(|&(r, _)| r);
            if let Some(w) = col.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateEntry {
                    row: w[0].0 as usize + 1,
                    col: c + 1,
                });
            }
            col.retain(|&(_, v)| v != 0.0);
            for &(r, v) in col.iter() {
                rows[r as usize].push((c as u32, v));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            columns,
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column(&self, c: usize) -> &[(u32, f64)] {
        &self.columns[c]
    }

    pub fn row(&self, r: usize) -> &[(u32, f64)] {
        &self.rows[r]
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                out[[r as usize, c]] = v;
            }
        }
        out
    }
}

/// Paired view over two sparse matrices sharing the row (observation) axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePairedSample {
    x: SparseColumnMatrix,
    y: SparseColumnMatrix,
}

impl SparsePairedSample {
    pub fn new(x: SparseColumnMatrix, y: SparseColumnMatrix) -> Result<Self> {
        if x.n_rows() != y.n_rows() {
            return Err(Error::RowCountMismatch {
                x_rows: x.n_rows(),
                y_rows: y.n_rows(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &SparseColumnMatrix {
        &self.x
    }

    pub fn y(&self) -> &SparseColumnMatrix {
        &self.y
    }

    pub fn to_dense(&self) -> Result<PairedSample> {
        PairedSample::new(self.x.to_dense(), self.y.to_dense())
    }
}

impl PairedRows for SparsePairedSample {
    fn n(&self) -> usize {
        self.x.n_rows()
    }

    fn d1(&self) -> usize {
        self.x.n_cols()
    }

    fn d2(&self) -> usize {
        self.y.n_cols()
    }

    fn x_entries(&self, i: usize) -> Vec<(usize, f64)> {
        self.x.row(i).iter().map(|&(c, v)| (c as usize, v)).collect()
    }

    fn y_entries(&self, i: usize) -> Vec<(usize, f64)> {
        self.y.row(i).iter().map(|&(c, v)| (c as usize, v)).collect()
    }

    fn is_sparse(&self) -> bool {
        true
    }
}

/// Loads a paired sample from a headed, comma-separated file.
///
/// `x_cols` and `y_cols` name header columns; they must be nonempty and
/// disjoint. Every selected cell must parse as a finite real.
pub fn load_paired_csv(
    path: impl AsRef<Path>,
    x_cols: &[impl AsRef<str>],
    y_cols: &[impl AsRef<str>],
) -> Result<PairedSample> {
    let path = path.as_ref();
    let x_cols: Vec<&str> = x_cols.iter().map(AsRef::as_ref).collect();
    let y_cols: Vec<&str> = y_cols.iter().map(AsRef::as_ref).collect();
    if x_cols.is_empty() || y_cols.is_empty() {
        return Err(Error::EmptySelection);
    }
    let xs: HashSet<&str> = x_cols.iter().copied().collect();
    let mut overlap: Vec<String> = y_cols
        .iter()
        .filter(|c| xs.contains(*c))
        .map(|c| c.to_string())
        .collect();
    if !overlap.is_empty() {
        overlap.dedup();
        return Err(Error::OverlappingSelectors(overlap));
    }
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let locate = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let x_idx = x_cols.iter().map(|c| locate(c)).collect::<Result<Vec<_>>>()?;
    let y_idx = y_cols.iter().map(|c| locate(c)).collect::<Result<Vec<_>>>()?;

    let mut x_vals = Vec::new();
    let mut y_vals = Vec::new();
    let mut n = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let cell_value = |idx: usize, name: &str| {
            let cell = record.get(idx).unwrap_or("");
            parse_cell(cell).ok_or_else(|| Error::Parse {
                row: r + 1,
                col: name.to_string(),
                msg: format!("cannot parse {cell:?} as a finite real"),
            })
        };
        for (&idx, name) in x_idx.iter().zip(&x_cols) {
            x_vals.push(cell_value(idx, name)?);
        }
        for (&idx, name) in y_idx.iter().zip(&y_cols) {
            y_vals.push(cell_value(idx, name)?);
        }
        n += 1;
    }
    let x = Array2::from_shape_vec((n, x_cols.len()), x_vals).expect("row-major fill");
    let y = Array2::from_shape_vec((n, y_cols.len()), y_vals).expect("row-major fill");
    PairedSample::new(x, y)
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            row,
            col: String::new(),
            msg: format!("{other:?}"),
        },
    }
}

/// Writes a sample as CSV with 17 significant digits per value.
pub fn write_paired_csv(
    sample: &PairedSample,
    path: impl AsRef<Path>,
    x_names: &[impl AsRef<str>],
    y_names: &[impl AsRef<str>],
) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if x_names.len() != sample.d1() || y_names.len() != sample.d2() {
        return Err(Error::InvalidParameter(
            "header names must match the sample dimensions".into(),
        ));
    }
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    let header: Vec<&str> = x_names
        .iter()
        .map(AsRef::as_ref)
        .chain(y_names.iter().map(AsRef::as_ref))
        .collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for (xr, yr) in sample.x.rows().into_iter().zip(sample.y.rows()) {
        let cells: Vec<String> = xr.iter().chain(yr.iter()).map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a coordinate-format sparse matrix.
///
/// Lines starting with `%` are comments (the MatrixMarket banner included).
/// The first remaining line is `n_rows n_cols [nnz]`; every later line is a
/// 1-based `row col value` triplet.
pub fn read_sparse_market(path: impl AsRef<Path>) -> Result<SparseColumnMatrix> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut dims: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse {
            row: lineno + 1,
            col: String::new(),
            msg: format!("{msg}: {line:?}"),
        };
        match dims {
            None => {
                if fields.len() < 2 {
                    return Err(bad("expected `n_rows n_cols [nnz]`"));
                }
                let r = fields[0].parse().map_err(|_| bad("bad row count"))?;
                let c = fields[1].parse().map_err(|_| bad("bad column count"))?;
                dims = Some((r, c));
            }
            Some((n_rows, n_cols)) => {
                if fields.len() != 3 {
                    return Err(bad("expected `row col value`"));
                }
                let r: usize = fields[0].parse().map_err(|_| bad("bad row index"))?;
                let c: usize = fields[1].parse().map_err(|_| bad("bad column index"))?;
                let v: f64 = fields[2].parse().map_err(|_| bad("bad value"))?;
                if r == 0 || c == 0 || r > n_rows || c > n_cols {
                    return Err(Error::IndexOutOfBounds {
                        row: r,
                        col: c,
                        n_rows,
                        n_cols,
                    });
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (n_rows, n_cols) = dims.ok_or_else(|| Error::Parse {
        row: 0,
        col: String::new(),
        msg: "missing dimension line".into(),
    })?;
    SparseColumnMatrix::from_triplets(n_rows, n_cols, triplets)
}

/// Loads the x and y blocks of a sparse paired sample from two triplet files.
pub fn load_sparse_market(
    path_x: impl AsRef<Path>,
    path_y: impl AsRef<Path>,
) -> Result<SparsePairedSample> {
    SparsePairedSample::new(read_sparse_market(path_x)?, read_sparse_market(path_y)?)
}

/// Per-column location and scale of the x and y blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
}

impl StandardizationStats {
    pub fn constant_x_columns(&self) -> Vec<usize> {
        constant_columns(&self.x_std)
    }

    pub fn constant_y_columns(&self) -> Vec<usize> {
        constant_columns(&self.y_std)
    }
}

fn constant_columns(std: &[f64]) -> Vec<usize> {
    std.iter()
        .enumerate()
        .filter(|(_, s)| **s == 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Centers and scales every non-constant column in place (sample std, n-1).
/// Constant columns are left unchanged. Returns `(mean, std)` per column.
pub fn standardize_columns(block: &mut Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = block.nrows() as f64;
    let mut means = Vec::with_capacity(block.ncols());
    let mut stds = Vec::with_capacity(block.ncols());
    for mut col in block.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = if n > 1.0 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        // A column whose values all coincide has ss == 0 exactly.
        let sd = if col.iter().all(|v| *v == col[0]) { 0.0 } else { sd };
        if sd > 0.0 {
            col.mapv_inplace(|v| (v - mean) / sd);
        }
        means.push(mean);
        stds.push(sd);
    }
    (means, stds)
}

pub fn standardize(sample: &PairedSample) -> (PairedSample, StandardizationStats) {
    let mut x = sample.x.clone();
    let mut y = sample.y.clone();
    let (x_mean, x_std) = standardize_columns(&mut x);
    let (y_mean, y_std) = standardize_columns(&mut y);
    (
        PairedSample { x, y },
        StandardizationStats {
            x_mean,
            x_std,
            y_mean,
            y_std,
        },
    )
}
