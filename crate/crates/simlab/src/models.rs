//! Generative designs: only the first coordinates of `X` and `Y` are related.

use std::fmt;
use std::str::FromStr;

use cpc_core::rng::rng_from_seed;
use cpc_core::{Error, PairedSample, Result};
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
}

impl ModelId {
    pub const ALL: [ModelId; 6] = [ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4, ModelId::M5, ModelId::M6];

    /// Position used in seed derivation.
    pub fn index(self) -> u64 {
        self as u64 + 1
    }

    /// The signal `g(x_1)` entering `Y_1 = a · g(x_1) + ε`. M4 draws from
    /// `rng` because its signal is itself random.
    fn signal(self, x1: f64, rng: &mut impl rand::Rng) -> f64 {
        match self {
            ModelId::M1 => x1,
            ModelId::M2 => x1.sin(),
            ModelId::M3 => x1.exp(),
            ModelId::M4 => {
                let z: f64 = rng.sample(StandardNormal);
                if x1 < 0.0 {
                    1.0 + z
                } else {
                    -1.0 + z
                }
            }
            ModelId::M5 => (4.0 * x1 * x1).ln(),
            ModelId::M6 => 5.0 * x1.abs().sqrt(),
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidModel(format!("unknown model '{s}' (expected M1..M6)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Covariance {
    Identity,
    /// `Σ_ij = ρ^{|i−j|}`.
    Ar1 { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tails {
    Gaussian,
    /// Multivariate t by Gaussian scale mixture.
    StudentT { df: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimModel {
    pub id: ModelId,
    pub a: f64,
    pub d1: usize,
    pub d2: usize,
    pub covariance: Covariance,
    pub tails: Tails,
}

impl SimModel {
    pub fn new(id: ModelId, a: f64, d1: usize, d2: usize) -> Self {
        Self {
            id,
            a,
            d1,
            d2,
            covariance: Covariance::Identity,
            tails: Tails::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::InvalidModel("d1 and d2 must be >= 1".into()));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidModel(format!("signal a must be finite and >= 0, got {}", self.a)));
        }
        if let Covariance::Ar1 { rho } = self.covariance {
            if !(rho.abs() < 1.0) {
                return Err(Error::InvalidModel(format!("ar1 rho must lie in (-1, 1), got {rho}")));
            }
        }
        if let Tails::StudentT { df } = self.tails {
            if !(df > 0.0) {
                return Err(Error::InvalidModel(format!("t degrees of freedom must be > 0, got {df}")));
            }
        }
        Ok(())
    }
}

/// One row of the configured noise law in dimension `d`.
fn noise_row(d: usize, cov: Covariance, tails: Tails, rng: &mut impl rand::Rng, out: &mut [f64]) {
    let mut prev = 0.0;
    for (j, o) in out.iter_mut().enumerate().take(d) {
        let e: f64 = rng.sample(StandardNormal);
        *o = match cov {
            Covariance::Identity => e,
            Covariance::Ar1 { rho } => {
                if j == 0 {
                    e
                } else {
                    rho * prev + (1.0 - rho * rho).sqrt() * e
                }
            }
        };
        prev = *o;
    }
    if let Tails::StudentT { df } = tails {
        let w: f64 = ChiSquared::new(df).expect("validated df").sample(rng);
        let scale = (w / df).sqrt();
        for o in out.iter_mut() {
            *o /= scale;
        }
    }
}

/// Draws `n` rows from the model; deterministic in `(model, n, seed)`.
pub fn generate(model: &SimModel, n: usize, seed: u64) -> Result<PairedSample> {
    model.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut x = Array2::zeros((n, model.d1));
    let mut y = Array2::zeros((n, model.d2));
    for i in 0..n {
        let mut xr = x.row_mut(i);
        noise_row(model.d1, model.covariance, model.tails, &mut rng, xr.as_slice_mut().expect("contiguous"));
        let mut yr = y.row_mut(i);
        noise_row(model.d2, model.covariance, model.tails, &mut rng, yr.as_slice_mut().expect("contiguous"));
        let g = model.id.signal(x[[i, 0]], &mut rng);
        let eps: f64 = rng.sample(StandardNormal);
        y[[i, 0]] = model.a * g + eps;
    }
    PairedSample::new(x, y)
}
