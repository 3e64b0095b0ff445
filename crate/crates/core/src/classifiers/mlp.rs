//! One-hidden-layer ReLU network with a sigmoid output.
//!
//! Trained on binary cross-entropy plus `l1 · ‖W1‖₁` with minibatch Adam and
//! inverted dropout on the hidden layer.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::split::LabeledTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpOptions {
    pub hidden: usize,
    pub l1_penalty: f64,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub batch: usize,
    pub step: f64,
}

impl MlpOptions {
    /// Width used when none is given: twice the input dimension, capped.
    pub fn default_hidden(d_in: usize) -> usize {
        (2 * d_in).clamp(1, 256)
    }

    pub fn with_defaults(d_in: usize) -> Self {
        Self {
            hidden: Self::default_hidden(d_in),
            l1_penalty: 1e-3,
            dropout_rate: 0.1,
            epochs: 50,
            batch: 64,
            step: 1e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::InvalidParameter("hidden width must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidParameter(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.batch == 0 || !(self.step > 0.0) || !(self.l1_penalty >= 0.0) {
            return Err(Error::InvalidParameter(
                "batch must be >= 1, step > 0 and l1 penalty >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FlatParams", try_from = "FlatParams")]
pub struct MlpParams {
    /// `d_in × h`, so that hidden pre-activations are `X · W1 + b1`.
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

#[derive(Serialize, Deserialize)]
struct FlatParams {
    d_in: usize,
    hidden: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl From<MlpParams> for FlatParams {
    fn from(p: MlpParams) -> Self {
        Self {
            d_in: p.d_in(),
            hidden: p.hidden(),
            w1: p.w1.iter().copied().collect(),
            b1: p.b1.to_vec(),
            w2: p.w2.to_vec(),
            b2: p.b2,
        }
    }
}

impl TryFrom<FlatParams> for MlpParams {
    type Error = Error;

    fn try_from(f: FlatParams) -> Result<Self> {
        let mut flat = f.w1;
        flat.extend(f.b1);
        flat.extend(f.w2);
        flat.push(f.b2);
        MlpParams::from_flat(f.d_in, f.hidden, &flat)
    }
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(d_in: usize, h: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let l1 = (6.0 / (d_in + h) as f64).sqrt();
        let l2 = (6.0 / (h + 1) as f64).sqrt();
        let w1 = Array2::from_shape_fn((d_in, h), |_| rng.random_range(-l1..l1));
        let w2 = Array1::from_shape_fn(h, |_| rng.random_range(-l2..l2));
        Self {
            w1,
            b1: Array1::zeros(h),
            w2,
            b2: 0.0,
        }
    }

    pub fn d_in(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + 2 * self.hidden() + 1
    }

    /// Flat layout: W1 (row-major), b1, w2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w1.iter().copied().collect();
        v.extend(self.b1.iter());
        v.extend(self.w2.iter());
        v.push(self.b2);
        v
    }

    pub fn from_flat(d_in: usize, h: usize, v: &[f64]) -> Result<Self> {
        let need = d_in * h + 2 * h + 1;
        if v.len() != need {
            return Err(Error::DimensionMismatch {
                expected: need,
                got: v.len(),
            });
        }
        let (w1, rest) = v.split_at(d_in * h);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        Ok(Self {
            w1: Array2::from_shape_vec((d_in, h), w1.to_vec()).expect("sized above"),
            b1: Array1::from(b1.to_vec()),
            w2: Array1::from(w2.to_vec()),
            b2: b2[0],
        })
    }

    fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite()) && self.b2.is_finite()
    }

    /// Output logits for the given rows of `x`, no dropout.
    pub fn logits(&self, x: &Design, rows: &[usize]) -> Array1<f64> {
        let mut z = x.rows_matmul(rows, self.w1.view());
        z += &self.b1;
        z.mapv_inplace(|v| v.max(0.0));
        z.dot(&self.w2) + self.b2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpScoreModel {
    pub params: MlpParams,
    pub options: MlpOptions,
    pub seed: u64,
    pub final_loss: f64,
}

impl MlpScoreModel {
    pub(crate) fn logits(&self, design: &Design) -> Vec<f64> {
        let rows: Vec<usize> = (0..design.n_rows()).collect();
        self.params.logits(design, &rows).to_vec()
    }
}

fn bce(z: f64, y: f64) -> f64 {
    // log(1 + e^z) − y z
    let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    sp - y * z
}

struct Grads {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array1<f64>,
    b2: f64,
}

/// Data loss and gradient on `rows`; `mask` scales hidden units (dropout).
fn batch_loss_grad(
    p: &MlpParams,
    x: &Design,
    y: &[f64],
    rows: &[usize],
    mask: Option<ArrayView2<'_, f64>>,
) -> (f64, Grads) {
    let m = rows.len() as f64;
    let pre = {
        let mut z = x.rows_matmul(rows, p.w1.view());
        z += &p.b1;
        z
    };
    let mut act = pre.mapv(|v| v.max(0.0));
    if let Some(mk) = mask {
        act *= &mk;
    }
    let out = act.dot(&p.w2) + p.b2;
    let mut loss = 0.0;
    let mut dout = Array1::zeros(rows.len());
    for (k, &r) in rows.iter().enumerate() {
        loss += bce(out[k], y[r]);
        dout[k] = (sigmoid(out[k]) - y[r]) / m;
    }
    let gw2 = act.t().dot(&dout);
    let gb2 = dout.sum();
    let mut dpre = dout
        .view()
        .insert_axis(Axis(1))
        .dot(&p.w2.view().insert_axis(Axis(0)));
    Zip::from(&mut dpre).and(&pre).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0
        }
    });
    if let Some(mk) = mask {
        dpre *= &mk;
    }
    let gb1 = dpre.sum_axis(Axis(0));
    let gw1 = x.rows_t_matmul(rows, dpre.view());
    (
        loss / m,
        Grads {
            w1: gw1,
            b1: gb1,
            w2: gw2,
            b2: gb2,
        },
    )
}

/// Full-batch objective (cross-entropy + `l1 · ‖W1‖₁`, no dropout) and its
/// gradient in the flat parameter layout.
pub fn loss_and_grad(p: &MlpParams, x: &Design, y: &[f64], l1: f64) -> (f64, Vec<f64>) {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let (loss, mut g) = batch_loss_grad(p, x, y, &rows, None);
    g.w1.zip_mut_with(&p.w1, |gi, &w| *gi += l1 * w.signum() * (w != 0.0) as u8 as f64);
    let reg = l1 * p.w1.iter().map(|w| w.abs()).sum::<f64>();
    let flat = MlpParams {
        w1: g.w1,
        b1: g.b1,
        w2: g.w2,
        b2: g.b2,
    }
    .to_flat();
    (loss + reg, flat)
}

/// Full-batch objective only.
pub fn loss(p: &MlpParams, x: &Design, y: &[f64], l1: f64) -> f64 {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let z = p.logits(x, &rows);
    let data: f64 = z.iter().zip(y).map(|(&zi, &yi)| bce(zi, yi)).sum::<f64>() / y.len() as f64;
    data + l1 * p.w1.iter().map(|w| w.abs()).sum::<f64>()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-7;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * g;
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * g * g;
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

/// Trains the network on `train`, deterministically in `seed`.
pub fn fit_mlp(train: &LabeledTable, opts: MlpOptions, seed: u64) -> Result<MlpScoreModel> {
    opts.validate()?;
    train.require_two_classes()?;
    let x = &train.design;
    let y = &train.labels;
    let n = train.n_rows();
    let h = opts.hidden;
    let mut p = MlpParams::init(x.n_cols(), h, derive_seed(&[seed, 0]));
    let mut rng = rng_from_seed(derive_seed(&[seed, 1]));
    let n_w1 = p.w1.len();
    let mut flat = p.to_flat();
    let mut adam = Adam::new(flat.len());
    let keep = 1.0 - opts.dropout_rate;
    let mut order: Vec<usize> = (0..n).collect();
    let mut final_loss = f64::NAN;

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for rows in order.chunks(opts.batch) {
            let mask = (opts.dropout_rate > 0.0).then(|| {
                Array2::from_shape_fn((rows.len(), h), |_| {
                    if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }
                })
            });
            let (l, g) = batch_loss_grad(&p, x, y, rows, mask.as_ref().map(|m| m.view()));
            if !l.is_finite() {
                return Err(Error::DivergenceDetected(epoch));
            }
            epoch_loss += l * rows.len() as f64;
            let mut gflat: Vec<f64> = g.w1.iter().copied().collect();
            for (gk, &w) in gflat.iter_mut().zip(&flat[..n_w1]) {
                if w != 0.0 {
                    *gk += opts.l1_penalty * w.signum();
                }
            }
            gflat.extend(g.b1.iter());
            gflat.extend(g.w2.iter());
            gflat.push(g.b2);
            adam.step(&mut flat, &gflat, opts.step);
            p = MlpParams::from_flat(x.n_cols(), h, &flat)?;
        }
        final_loss = epoch_loss / n as f64;
        if !final_loss.is_finite() || !p.is_finite() {
            return Err(Error::DivergenceDetected(epoch));
        }
    }

    Ok(MlpScoreModel {
        params: p,
        options: opts,
        seed,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{central_difference, relative_error};

    fn xor_table() -> LabeledTable {
        let side = 20;
        let mut x = Array2::zeros((side * side, 2));
        let mut labels = Vec::new();
        for i in 0..side {
            for j in 0..side {
                let (a, b) = (i as f64 / 9.5 - 1.0, j as f64 / 9.5 - 1.0);
                x[[i * side + j, 0]] = a;
                x[[i * side + j, 1]] = b;
                labels.push(if a * b > 0.0 { 1.0 } else { 0.0 });
            }
        }
        LabeledTable {
            design: Design::Dense(x),
            labels,
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let t = xor_table();
        let mut opts = MlpOptions::with_defaults(2);
        opts.epochs = 0;
        let m = fit_mlp(&t, opts, 9).unwrap();
        assert_eq!(m.params, MlpParams::init(2, opts.hidden, derive_seed(&[9, 0])));
        assert_eq!(m.logits(&t.design), fit_mlp(&t, opts, 9).unwrap().logits(&t.design));
    }

    #[test]
    fn learns_xor() {
        let t = xor_table();
        let opts = MlpOptions {
            hidden: 8,
            l1_penalty: 0.0,
            dropout_rate: 0.0,
            epochs: 200,
            batch: 16,
            step: 0.01,
        };
        let m = fit_mlp(&t, opts, 1).unwrap();
        let acc = m
            .logits(&t.design)
            .iter()
            .zip(&t.labels)
            .filter(|(z, l)| (**z > 0.0) == (**l == 1.0))
            .count() as f64
            / t.n_rows() as f64;
        assert!(acc >= 0.9, "accuracy {acc}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = xor_table();
        let mut rng = rng_from_seed(5);
        for _ in 0..10 {
            let flat: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = MlpParams::from_flat(2, 1, &flat).unwrap();
            let (_, g) = loss_and_grad(&p, &t.design, &t.labels, 1e-3);
            let fd = central_difference(
                |v| loss(&MlpParams::from_flat(2, 1, v).unwrap(), &t.design, &t.labels, 1e-3),
                &flat,
                1e-6,
            );
            assert!(relative_error(&g, &fd, 1e-8) < 1e-4);
        }
    }

    #[test]
    fn bad_options_rejected() {
        let t = xor_table();
        let mut o = MlpOptions::with_defaults(2);
        o.dropout_rate = 1.0;
        assert!(fit_mlp(&t, o, 0).is_err());
        o.dropout_rate = 0.1;
        o.hidden = 0;
        assert!(fit_mlp(&t, o, 0).is_err());
    }
}
