use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fwht::fwht_in_place;
use crate::error::{check_len, Result, SrprError};
use crate::numeric::{self, BLOCK};
use crate::rng::{stream_rng, Stream};

/// Sensing matrix `A ∈ ℝ^{n×p}`, applied matrix-free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SensingEnsemble {
    /// Rows `aᵢ ~ N(0, I_p)`, stored row-major.
    DenseGaussian { p: usize, n: usize, rows: Vec<f64> },
    /// `A = (1/√k)[H S₁; …; H S_k]` with `H` the orthonormal Hadamard matrix
    /// and `S_j` random sign diagonals, stored block after block.
    RandomizedHadamard { p: usize, k: usize, signs: Vec<i8> },
}

impl SensingEnsemble {
    pub fn gaussian(p: usize, n: usize, seed: u64) -> Result<Self> {
        if p < 2 {
            return Err(SrprError::param("p", format!("need p >= 2, got {p}")));
        }
        if n == 0 {
            return Err(SrprError::param("n", "need at least one measurement"));
        }
        let mut rng = stream_rng(seed, Stream::Ensemble);
        let rows = numeric::standard_normal_vec(&mut rng, n * p);
        Ok(SensingEnsemble::DenseGaussian { p, n, rows })
    }

    pub fn from_rows(p: usize, n: usize, rows: Vec<f64>) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(SrprError::param("shape", "empty sensing matrix"));
        }
        check_len(n * p, rows.len())?;
        Ok(SensingEnsemble::DenseGaussian { p, n, rows })
    }

    pub fn hadamard(p: usize, k: usize, seed: u64) -> Result<Self> {
        if !p.is_power_of_two() {
            return Err(SrprError::NotPowerOfTwo(p));
        }
        if k == 0 {
            return Err(SrprError::param("k", "need at least one block"));
        }
        let mut rng = stream_rng(seed, Stream::Ensemble);
        let signs = (0..k * p)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Ok(SensingEnsemble::RandomizedHadamard { p, k, signs })
    }

    pub fn hadamard_from_signs(p: usize, k: usize, signs: Vec<i8>) -> Result<Self> {
        if !p.is_power_of_two() {
            return Err(SrprError::NotPowerOfTwo(p));
        }
        if k == 0 {
            return Err(SrprError::param("k", "need at least one block"));
        }
        check_len(k * p, signs.len())?;
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(SrprError::param("signs", "entries must be +1 or -1"));
        }
        Ok(SensingEnsemble::RandomizedHadamard { p, k, signs })
    }

    pub fn p(&self) -> usize {
        match self {
            SensingEnsemble::DenseGaussian { p, .. } => *p,
            SensingEnsemble::RandomizedHadamard { p, .. } => *p,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SensingEnsemble::DenseGaussian { n, .. } => *n,
            SensingEnsemble::RandomizedHadamard { p, k, .. } => p * k,
        }
    }

    pub fn is_hadamard(&self) -> bool {
        matches!(self, SensingEnsemble::RandomizedHadamard { .. })
    }

    /// Variance of a single entry of `A`: `E[(aᵢᵀx)²] = σ²‖x‖²`.
    pub fn entry_variance(&self) -> f64 {
        match self {
            SensingEnsemble::DenseGaussian { .. } => 1.0,
            SensingEnsemble::RandomizedHadamard { .. } => 1.0 / self.n() as f64,
        }
    }

    /// `‖(1/n)AᵀA‖₂`: exactly `1/n` for the Hadamard ensemble, by power
    /// iteration from a fixed start otherwise.
    pub fn covariance_norm(&self) -> f64 {
        let n = self.n() as f64;
        if self.is_hadamard() {
            return 1.0 / n;
        }
        let start = numeric::unit_sphere(&mut stream_rng(0, Stream::Probe), self.p());
        numeric::power_iteration(|v| numeric::scale(&self.adjoint(&self.forward(v)), 1.0 / n), start, 500, 1e-10)
            .eigenvalue
    }

    /// `Ax`
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.p(), x.len())?;
        Ok(self.forward(x))
    }

    /// `Aᵀv`
    pub fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), v.len())?;
        Ok(self.adjoint(v))
    }

    pub(crate) fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SensingEnsemble::DenseGaussian { p, rows, .. } => {
                rows.chunks_exact(*p).map(|row| numeric::dot(row, x)).collect()
            }
            SensingEnsemble::RandomizedHadamard { p, k, signs } => {
                let s = 1.0 / (*k as f64).sqrt();
                let mut out = Vec::with_capacity(p * k);
                for block in signs.chunks_exact(*p) {
                    let start = out.len();
                    out.extend(x.iter().zip(block).map(|(v, &g)| s * f64::from(g) * v));
                    fwht_in_place(&mut out[start..]).expect("p is a power of two");
                }
                out
            }
        }
    }

    pub(crate) fn adjoint(&self, v: &[f64]) -> Vec<f64> {
        match self {
            SensingEnsemble::DenseGaussian { p, rows, .. } => {
                // per-block partial vectors combined pairwise, like blocked_sum
                let mut partial: Vec<Vec<f64>> = rows
                    .chunks(BLOCK * p)
                    .zip(v.chunks(BLOCK))
                    .map(|(rblock, vblock)| {
                        let mut acc = vec![0.0; *p];
                        for (row, &vi) in rblock.chunks_exact(*p).zip(vblock) {
                            if vi != 0.0 {
                                acc.iter_mut().zip(row).for_each(|(a, r)| *a += vi * r);
                            }
                        }
                        acc
                    })
                    .collect();
                while partial.len() > 1 {
                    partial = partial
                        .chunks(2)
                        .map(|pair| match pair {
                            [a, b] => numeric::add(a, b),
                            [a] => a.clone(),
                            _ => unreachable!(),
                        })
                        .collect();
                }
                partial.pop().unwrap_or_else(|| vec![0.0; *p])
            }
            SensingEnsemble::RandomizedHadamard { p, k, signs } => {
                let s = 1.0 / (*k as f64).sqrt();
                let mut out = vec![0.0; *p];
                let mut buf = vec![0.0; *p];
                for (block, vj) in signs.chunks_exact(*p).zip(v.chunks_exact(*p)) {
                    buf.copy_from_slice(vj);
                    fwht_in_place(&mut buf).expect("p is a power of two");
                    out.iter_mut()
                        .zip(&buf)
                        .zip(block)
                        .for_each(|((o, b), &g)| *o += s * f64::from(g) * b);
                }
                out
            }
        }
    }

    /// Row `i` of `A`. For the Hadamard ensemble this costs one transform.
    pub fn row(&self, i: usize) -> Vec<f64> {
        match self {
            SensingEnsemble::DenseGaussian { p, rows, .. } => rows[i * p..(i + 1) * p].to_vec(),
            SensingEnsemble::RandomizedHadamard { .. } => {
                let mut e = vec![0.0; self.n()];
                e[i] = 1.0;
                self.adjoint(&e)
            }
        }
    }

    /// Row-major dense copy of `A`; intended for small test problems.
    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            SensingEnsemble::DenseGaussian { rows, .. } => rows.clone(),
            SensingEnsemble::RandomizedHadamard { .. } => {
                (0..self.n()).flat_map(|i| self.row(i)).collect()
            }
        }
    }
}
