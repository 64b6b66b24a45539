#![allow(dead_code)]

use rand::Rng;
use srpr::numeric;
use srpr::rng::{stream_rng, Stream};
use srpr::*;

pub fn gaussian_instance(p: usize, n: usize, p_fail: f64, kind: CorruptionKind, seed: u64) -> Instance {
    let x = synthetic_signal(p, seed);
    let ens = SensingEnsemble::gaussian(p, n, seed).unwrap();
    let spec = CorruptionSpec::new(p_fail, kind, 0.0).unwrap();
    generate_instance(ens, &x, spec, seed).unwrap()
}

pub fn noiseless(p: usize, n: usize, seed: u64) -> Instance {
    gaussian_instance(p, n, 0.0, CorruptionKind::Zeroing, seed)
}

/// `x⋆ + r·u` with `u` a random unit vector.
pub fn perturbed_truth(inst: &Instance, r: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Probe);
    let u = numeric::unit_sphere(&mut rng, inst.p());
    numeric::axpy(inst.x_star().unwrap(), r, &u)
}

/// A tiny proximal-linear subproblem: data, the point `x` and the penalty.
pub struct TinyProblem {
    pub instance: Instance,
    pub x: Vec<f64>,
    pub beta: f64,
}

pub fn tiny_problem(seed: u64) -> TinyProblem {
    let mut rng = stream_rng(seed, Stream::Probe);
    let p = rng.random_range(1..=4);
    let n = rng.random_range(2..=10);
    let rows = numeric::standard_normal_vec(&mut rng, n * p);
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
    let x = numeric::standard_normal_vec(&mut rng, p);
    let beta = 10f64.powf(rng.random_range(-1.0..1.0));
    let ens = SensingEnsemble::from_rows(p, n, rows).unwrap();
    TinyProblem {
        instance: Instance::from_measurements(ens, b).unwrap(),
        x,
        beta,
    }
}

/// `(cᵢ, gᵢ)` of the linearization at `x`: `cᵢ = (aᵢᵀx)² − bᵢ`, `gᵢ = 2(aᵢᵀx)aᵢ`.
pub fn linearization(t: &TinyProblem) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = t.instance.p();
    let a = t.instance.ensemble.to_dense();
    let mut c = Vec::new();
    let mut g = Vec::new();
    for (i, row) in a.chunks(p).enumerate() {
        let ax = numeric::dot(row, &t.x);
        c.push(ax * ax - t.instance.b[i]);
        g.push(numeric::scale(row, 2.0 * ax));
    }
    (c, g)
}

/// `G(d) = (1/n) Σ |cᵢ + gᵢᵀd| + (β/2)‖d‖²`
pub fn subproblem_value(c: &[f64], g: &[Vec<f64>], beta: f64, d: &[f64]) -> f64 {
    let n = c.len() as f64;
    let l1: f64 = c.iter().zip(g).map(|(ci, gi)| (ci + numeric::dot(gi, d)).abs()).sum();
    l1 / n + 0.5 * beta * numeric::dot(d, d)
}

fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Vec<f64> {
    let k = r.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            for j in col..k {
                m[row][j] -= f * m[col][j];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|j| m[row][j] * x[j]).sum();
        x[row] = (r[row] - s) / m[row][row];
    }
    x
}

/// Minimizer of `G` by damped Newton on `|t| ≈ √(t² + μ²)` with `μ` driven
/// from 1 down to 1e-12. The smoothed value is within `μ` of `G`, so the
/// returned point is optimal to far better than 1e-6.
pub fn subproblem_oracle(c: &[f64], g: &[Vec<f64>], beta: f64) -> Vec<f64> {
    let p = g[0].len();
    let n = c.len() as f64;
    let smooth = |d: &[f64], mu: f64| -> f64 {
        c.iter()
            .zip(g)
            .map(|(ci, gi)| {
                let t = ci + numeric::dot(gi, d);
                (t * t + mu * mu).sqrt()
            })
            .sum::<f64>()
            / n
            + 0.5 * beta * numeric::dot(d, d)
    };
    let mut d = vec![0.0; p];
    let mut mu = 1.0;
    while mu >= 1e-12 {
        for _ in 0..200 {
            let mut grad = numeric::scale(&d, beta);
            let mut hess: Vec<Vec<f64>> = (0..p)
                .map(|i| (0..p).map(|j| if i == j { beta } else { 0.0 }).collect())
                .collect();
            for (ci, gi) in c.iter().zip(g) {
                let t = ci + numeric::dot(gi, &d);
                let s = (t * t + mu * mu).sqrt();
                for a in 0..p {
                    grad[a] += t / s * gi[a] / n;
                    for b in 0..p {
                        hess[a][b] += mu * mu / (s * s * s) * gi[a] * gi[b] / n;
                    }
                }
            }
            let step = solve_dense(hess, numeric::scale(&grad, -1.0));
            let f0 = smooth(&d, mu);
            let slope = numeric::dot(&grad, &step);
            let mut t = 1.0;
            while t > 1e-20 && smooth(&numeric::axpy(&d, t, &step), mu) > f0 + 1e-4 * t * slope {
                t *= 0.5;
            }
            if t <= 1e-20 {
                break;
            }
            let next = numeric::axpy(&d, t, &step);
            let moved = numeric::dist(&next, &d);
            d = next;
            if moved <= 1e-15 * (1.0 + numeric::norm(&d)) {
                break;
            }
        }
        mu *= 0.1;
    }
    d
}
