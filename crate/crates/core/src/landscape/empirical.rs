use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, SrprError};
use crate::measurement::Instance;
use crate::numeric::{self, blocked_sum_by, LineFit};
use crate::objective::Objective;
use crate::rng::{stream_rng, Stream};
use crate::smoothed_loss::SmoothedLoss;

/// Evenly spaced points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if self.count == 0 || !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return Err(SrprError::param(name, "need count ≥ 1 and finite min ≤ max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u: Axis,
    pub v: Axis,
    /// Seed for the orthogonal direction.
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            u: Axis::new(-1.5, 1.5, 61),
            v: Axis::new(-1.5, 1.5, 61),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub u: f64,
    pub v: f64,
    pub f_delta: f64,
    pub grad_norm: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

/// Landscape statistics on the plane `x = u·x⋆ + v·x⊥`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub u_axis: Vec<f64>,
    pub v_axis: Vec<f64>,
    /// Unit vector orthogonal to `x⋆`.
    pub x_perp: Vec<f64>,
    /// Row-major in `u`: cell `(i, j)` sits at index `i·|v_axis| + j`.
    pub cells: Vec<GridCell>,
}

impl LandscapeGrid {
    pub fn cell(&self, i: usize, j: usize) -> &GridCell {
        &self.cells[i * self.v_axis.len() + j]
    }

    /// Cells whose gradient norm is at most `fraction` of the largest one.
    pub fn near_stationary(&self, fraction: f64) -> Vec<&GridCell> {
        let max = self.cells.iter().map(|c| c.grad_norm).fold(0.0, f64::max);
        self.cells
            .iter()
            .filter(|c| c.grad_norm <= fraction * max)
            .collect()
    }

    /// CSV with columns `u, v, f_delta, grad_norm, u1, u2, u3`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for c in &self.cells {
            out.serialize(c)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// A unit vector orthogonal to `x⋆`, drawn from the landscape stream.
pub fn orthogonal_direction(x_star: &[f64], seed: u64) -> Result<Vec<f64>> {
    if x_star.len() < 2 {
        return Err(SrprError::param("p", "need p ≥ 2 for an orthogonal direction"));
    }
    let ns = numeric::norm(x_star);
    if ns == 0.0 {
        return Err(SrprError::ZeroGroundTruth);
    }
    let mut rng = stream_rng(seed, Stream::Landscape);
    loop {
        let g = numeric::standard_normal_vec(&mut rng, x_star.len());
        let proj = numeric::dot(&g, x_star) / (ns * ns);
        let mut v = numeric::axpy(&g, -proj, x_star);
        // second pass removes what rounding left behind
        let proj = numeric::dot(&v, x_star) / (ns * ns);
        v = numeric::axpy(&v, -proj, x_star);
        if numeric::normalize(&mut v) > 1e-8 {
            return Ok(v);
        }
    }
}

pub fn empirical_scan(instance: &Instance, loss: SmoothedLoss, spec: &GridSpec) -> Result<LandscapeGrid> {
    spec.u.validate("u axis")?;
    spec.v.validate("v axis")?;
    let x_star = instance.x_star()?;
    let x_perp = orthogonal_direction(x_star, spec.seed)?;
    let u_axis = spec.u.points();
    let v_axis = spec.v.points();
    let obj = Objective::new(instance, loss);
    let nv = v_axis.len();
    let cells = (0..u_axis.len() * nv)
        .into_par_iter()
        .map(|k| {
            let (u, v) = (u_axis[k / nv], v_axis[k % nv]);
            let x: Vec<f64> = x_star
                .iter()
                .zip(&x_perp)
                .map(|(a, b)| u * a + v * b)
                .collect();
            let s = obj.landscape_stats(&x)?;
            Ok(GridCell {
                u,
                v,
                f_delta: s.f_delta,
                grad_norm: s.grad_norm,
                u1: s.u1,
                u2: s.u2,
                u3: s.u3,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeGrid {
        u_axis,
        v_axis,
        x_perp,
        cells,
    })
}

/// `h_n(u) = E_n[U₁(u·x₀)]/u² = (2/n)Σ (aᵢᵀx₀)² l′_δ(u²(aᵢᵀx₀)² − bᵢ)` at each `u`.
pub fn u1_profile(instance: &Instance, loss: SmoothedLoss, x0: &[f64], us: &[f64]) -> Result<Vec<f64>> {
    check_len(instance.p(), x0.len())?;
    if numeric::norm(x0) == 0.0 {
        return Err(SrprError::param("x0", "direction must be nonzero"));
    }
    if us.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
        return Err(SrprError::param("u grid", "values must be positive"));
    }
    let a2: Vec<f64> = instance.ensemble.forward(x0).iter().map(|a| a * a).collect();
    let c = 2.0 / instance.n() as f64;
    Ok(us
        .iter()
        .map(|&u| {
            let u2 = u * u;
            c * blocked_sum_by(a2.len(), |i| a2[i] * loss.deriv(u2 * a2[i] - instance.b[i]))
        })
        .collect())
}

/// Whether `h_n` is nondecreasing along the sorted grid, up to `1e-12`.
pub fn monotone_u1_check(instance: &Instance, loss: SmoothedLoss, x0: &[f64], us: &[f64]) -> Result<bool> {
    let mut sorted = us.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = u1_profile(instance, loss, x0, &sorted)?;
    Ok(h.windows(2).all(|w| w[1] - w[0] >= -1e-12))
}

/// One phase-1 outcome at a bandwidth and corruption level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VicinityPoint {
    pub delta: f64,
    pub p_fail: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VicinityFit {
    /// Mean over `p_fail` slices of the Spearman correlation between `δ` and
    /// the median relative error.
    pub spearman_delta: f64,
    /// Mean over `δ` slices of the Spearman correlation between `p_fail` and
    /// the median relative error.
    pub spearman_p_fail: f64,
    /// Median relative error against `δ·p_fail/(1 − p_fail)`.
    pub fit: LineFit,
    /// `(δ, p_fail, median relative error)` per cell.
    pub cells: Vec<(f64, f64, f64)>,
}

pub fn vicinity_radius_fit(points: &[VicinityPoint]) -> Result<VicinityFit> {
    let mut groups: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    for pt in points {
        if !(pt.delta > 0.0) || !(0.0..1.0).contains(&pt.p_fail) || !pt.rel_error.is_finite() {
            return Err(SrprError::param("points", "need δ > 0, p_fail ∈ [0, 1) and finite errors"));
        }
        groups
            .entry((pt.delta.to_bits(), pt.p_fail.to_bits()))
            .or_default()
            .push(pt.rel_error);
    }
    let cells: Vec<(f64, f64, f64)> = groups
        .iter()
        .map(|(&(d, f), v)| (f64::from_bits(d), f64::from_bits(f), numeric::median(v)))
        .collect();
    let mut deltas: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut fails: Vec<f64> = cells.iter().map(|c| c.1).collect();
    for axis in [&mut deltas, &mut fails] {
        axis.sort_by(f64::total_cmp);
        axis.dedup();
    }
    if deltas.len() < 3 || fails.len() < 3 {
        return Err(SrprError::param("points", "need at least 3 grid values along each axis"));
    }

    let slice_mean = |fixed: &[f64], key: fn(&(f64, f64, f64)) -> f64, along: fn(&(f64, f64, f64)) -> f64| {
        let rhos: Vec<f64> = fixed
            .iter()
            .filter_map(|&v| {
                let slice: Vec<_> = cells.iter().filter(|c| key(c) == v).collect();
                (slice.len() >= 3).then(|| {
                    let xs: Vec<f64> = slice.iter().map(|c| along(c)).collect();
                    let ys: Vec<f64> = slice.iter().map(|c| c.2).collect();
                    numeric::spearman(&xs, &ys)
                })
            })
            .collect();
        if rhos.is_empty() {
            f64::NAN
        } else {
            rhos.iter().sum::<f64>() / rhos.len() as f64
        }
    };
    let spearman_delta = slice_mean(&fails, |c| c.1, |c| c.0);
    let spearman_p_fail = slice_mean(&deltas, |c| c.0, |c| c.1);
    let xs: Vec<f64> = cells.iter().map(|c| c.0 * c.1 / (1.0 - c.1)).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.2).collect();
    Ok(VicinityFit {
        spearman_delta,
        spearman_p_fail,
        fit: numeric::fit_line(&xs, &ys),
        cells,
    })
}
