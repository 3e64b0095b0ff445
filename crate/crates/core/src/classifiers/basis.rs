//! Tensor-product polynomial bases over coordinate subsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisConfig {
    /// Size of each coordinate subset.
    pub s1: usize,
    /// Basis functions per subset.
    pub k_n: usize,
    /// Largest admissible expanded dimension.
    pub cap: usize,
}

impl BasisConfig {
    pub fn new(s1: usize, k_n: usize) -> Self {
        Self { s1, k_n, cap: 100_000 }
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All `k`-subsets of `0..d` in lexicographic order.
fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > d {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&i| cur[i] < d - k + i) else {
            return out;
        };
        cur[pos] += 1;
        for j in pos + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// First `k_n` exponent vectors of length `s1` with every entry ≥ 1, ordered
/// by total degree and then lexicographically.
fn exponents(s1: usize, k_n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(k_n);
    let mut total = s1 as u32;
    while out.len() < k_n {
        // Compositions of `total` into s1 positive parts, lexicographic.
        let mut batch = Vec::new();
        let mut stack = vec![(Vec::<u32>::new(), total)];
        while let Some((prefix, left)) = stack.pop() {
            let slots = s1 - prefix.len();
            if slots == 1 {
                let mut e = prefix;
                e.push(left);
                batch.push(e);
                continue;
            }
            for first in (1..=left - (slots as u32 - 1)).rev() {
                let mut e = prefix.clone();
                e.push(first);
                stack.push((e, left - first));
            }
        }
        out.extend(batch.into_iter().take(k_n - out.len()));
        total += 1;
    }
    out
}

/// Precomputed layout of the expansion for a given input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    d: usize,
    subsets: Vec<Vec<usize>>,
    exponents: Vec<Vec<u32>>,
}

impl Basis {
    pub fn new(d: usize, cfg: BasisConfig) -> Result<Self> {
        if cfg.s1 == 0 || cfg.s1 > d || cfg.k_n == 0 {
            return Err(Error::InvalidParameter(format!(
                "basis needs 1 <= s1 <= d and k_n >= 1 (s1={}, d={d}, k_n={})",
                cfg.s1, cfg.k_n
            )));
        }
        let m = binomial(d, cfg.s1)
            .and_then(|c| c.checked_mul(cfg.k_n))
            .unwrap_or(usize::MAX);
        if m > cfg.cap {
            return Err(Error::DimensionOverflow { m, cap: cfg.cap });
        }
        Ok(Self {
            d,
            subsets: subsets(d, cfg.s1),
            exponents: exponents(cfg.s1, cfg.k_n),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.subsets.len() * self.exponents.len()
    }

    pub fn expand_into(&self, z: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for s in &self.subsets {
            for e in &self.exponents {
                out.push(s.iter().zip(e).map(|(&c, &p)| z[c].powi(p as i32)).product());
            }
        }
    }

    pub fn expand(&self, z: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.expand_into(z, &mut out);
        out
    }
}

/// `ξ(z)` for a single point.
pub fn basis_expand(z: &[f64], cfg: BasisConfig) -> Result<Vec<f64>> {
    Ok(Basis::new(z.len(), cfg)?.expand(z))
}
