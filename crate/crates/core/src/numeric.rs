//! Small dense-vector kernels shared by every module.
//!
//! Reductions over measurement-length arrays go through [`blocked_sum`], which
//! fixes the summation tree (naive sums inside blocks of [`BLOCK`] values,
//! pairwise combination of block sums). The result depends only on the input
//! order, never on how work is split.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SrprError};

pub const BLOCK: usize = 1024;

pub fn blocked_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    blocked_sum_tree(values.chunks(BLOCK).map(|c| c.iter().sum()).collect())
}

/// Blocked sum of `f(i)` for `i in 0..len` without materializing all terms.
pub fn blocked_sum_by(len: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut partial = Vec::with_capacity(len / BLOCK + 1);
    let mut start = 0;
    while start < len {
        let end = (start + BLOCK).min(len);
        let mut acc = 0.0;
        for i in start..end {
            acc += f(i);
        }
        partial.push(acc);
        start = end;
    }
    blocked_sum_tree(partial)
}

fn blocked_sum_tree(mut partial: Vec<f64>) -> f64 {
    if partial.is_empty() {
        return 0.0;
    }
    while partial.len() > 1 {
        partial = partial
            .chunks(2)
            .map(|pair| pair.iter().sum())
            .collect();
    }
    partial[0]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= BLOCK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    blocked_sum_by(a.len(), |i| a[i] * b[i])
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|v| v * s).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `x + t * d`
pub fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    blocked_sum_by(a.len(), |i| (a[i] - b[i]) * (a[i] - b[i])).sqrt()
}

pub fn normalize(v: &mut [f64]) -> f64 {
    let nv = norm(v);
    if nv > 0.0 {
        v.iter_mut().for_each(|x| *x /= nv);
    }
    nv
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform direction on the unit sphere (normalized standard normals).
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let mut v = standard_normal_vec(rng, len);
        if normalize(&mut v) > 0.0 {
            return v;
        }
    }
}

/// Median with the usual midpoint convention for even lengths. NaNs sort last.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Bisection for a root of `f` on `[lo, hi]`; requires a sign change.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(SrprError::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of a power iteration.
#[derive(Debug, Clone)]
pub struct PowerResult {
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Power iteration for the dominant eigenpair of a symmetric operator.
///
/// Stops once `‖Av − λv‖ ≤ tol · |λ|` or after `max_iter` products.
pub fn power_iteration(
    mut op: impl FnMut(&[f64]) -> Vec<f64>,
    start: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> PowerResult {
    let mut v = start;
    normalize(&mut v);
    let mut av = op(&v);
    let mut lambda = dot(&v, &av);
    let mut residual = dist(&av, &scale(&v, lambda));
    let mut iterations = 1;
    while iterations < max_iter && residual > tol * lambda.abs() {
        v = av;
        if normalize(&mut v) == 0.0 {
            break;
        }
        av = op(&v);
        lambda = dot(&v, &av);
        residual = dist(&av, &scale(&v, lambda));
        iterations += 1;
    }
    PowerResult {
        eigenvalue: lambda,
        vector: v,
        residual,
        iterations,
    }
}

/// Average ranks (1-based) with ties sharing the mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) as f64 + (j + 1) as f64);
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Ordinary least-squares line `y ≈ slope·x + intercept` with its R².
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if sxx > 0.0 && syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}
