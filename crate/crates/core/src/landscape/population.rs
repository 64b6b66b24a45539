//! Population landscape of `F_δ` for Gaussian measurements.
//!
//! By rotational invariance every population quantity at `x` depends only on
//! `c = xᵀx⋆` and `s = ‖x − c x⋆‖` (with `‖x⋆‖ = 1`), and reduces to an
//! expectation over `(g₁, g₂) ~ N(0, I₂)` with `aᵀx⋆ = g₁`, `aᵀx = c g₁ + s g₂`
//! and residual `r = (c g₁ + s g₂)² − g₁²`.
//!
//! The default rule integrates in polar coordinates `g = √t (cos θ, sin θ)`.
//! The residual becomes `t q(θ)`, so the radial integral only sees the kernel
//! through the scale `δ/|q(θ)|`, and the angular integral is split at the
//! zeros of `q`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::quadrature::{adaptive, gauss_hermite, Estimate};
use crate::error::{Result, SrprError};
use crate::numeric;
use crate::rng::{stream_rng, Stream};
use crate::smoothed_loss::SmoothedLoss;

const RADIAL_END: f64 = 100.0;
const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    /// Adaptive Gauss–Kronrod in polar coordinates with target absolute error `tol`.
    Adaptive { tol: f64 },
    /// Tensor Gauss–Hermite with `nodes` per axis; the error estimate is the
    /// change when the node count doubles.
    GaussHermite { nodes: usize },
    /// Plain Monte Carlo; the error estimate is the standard error.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Adaptive { tol: 1e-9 }
    }
}

/// Population expectations that can be evaluated at `(c, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `E[l_δ(r)]`
    Value,
    /// `E[U₁] = E[2(aᵀx)² l′_δ(r)]`
    U1,
    /// `E[U₃] = E[2(aᵀx⋆)(aᵀx) l′_δ(r)]`, the gradient component along `x⋆`.
    U3,
    /// Gradient component along the in-plane direction orthogonal to `x⋆`.
    GradPerp,
    /// `wᵀ∇²F_δ w` for `w = w₀ x⋆ + w₁ e`, `e` the in-plane unit vector orthogonal to `x⋆`.
    QuadForm([f64; 2]),
}

impl Functional {
    fn pointwise(self, loss: &SmoothedLoss, c: f64, s: f64, g1: f64, g2: f64) -> f64 {
        let xg = c * g1 + s * g2;
        let r = xg * xg - g1 * g1;
        match self {
            Functional::Value => loss.value(r),
            Functional::U1 => 2.0 * xg * xg * loss.deriv(r),
            Functional::U3 => 2.0 * g1 * xg * loss.deriv(r),
            Functional::GradPerp => 2.0 * g2 * xg * loss.deriv(r),
            Functional::QuadForm([w0, w1]) => {
                let wg = w0 * g1 + w1 * g2;
                wg * wg * (2.0 * loss.deriv(r) + 4.0 * xg * xg * loss.second_deriv(r))
            }
        }
    }
}

/// Population statistics at one `(c, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationPoint {
    pub c: f64,
    pub s: f64,
    pub f_delta: f64,
    pub grad_norm: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    /// Largest error estimate among the computed expectations.
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationProbe {
    pub loss: SmoothedLoss,
    pub quadrature: Quadrature,
    /// Largest accepted error estimate.
    pub tolerance: f64,
}

impl PopulationProbe {
    pub fn new(loss: SmoothedLoss) -> Self {
        PopulationProbe {
            loss,
            quadrature: Quadrature::default(),
            tolerance: 1e-6,
        }
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self, c: f64, s: f64) -> Result<()> {
        if !c.is_finite() || !(s >= 0.0 && s.is_finite()) {
            return Err(SrprError::param("(c, s)", format!("need finite c and s ≥ 0, got ({c}, {s})")));
        }
        match self.quadrature {
            Quadrature::Adaptive { tol } if !(tol > 0.0) => Err(SrprError::param("tol", "must be positive")),
            Quadrature::GaussHermite { nodes } if nodes < 32 => {
                Err(SrprError::param("nodes", format!("need at least 32 per axis, got {nodes}")))
            }
            Quadrature::MonteCarlo { samples, .. } if samples < 2 => {
                Err(SrprError::param("samples", "need at least 2"))
            }
            _ => Ok(()),
        }
    }

    /// Estimate with its error, without the tolerance check.
    pub fn estimate(&self, functional: Functional, c: f64, s: f64) -> Result<Estimate> {
        self.validate(c, s)?;
        let e = match self.quadrature {
            Quadrature::Adaptive { tol } => polar(&self.loss, functional, c, s, tol),
            Quadrature::GaussHermite { nodes } => {
                let coarse = hermite(&self.loss, functional, c, s, nodes);
                let fine = hermite(&self.loss, functional, c, s, 2 * nodes);
                Estimate {
                    value: fine,
                    error: (fine - coarse).abs(),
                }
            }
            Quadrature::MonteCarlo { samples, seed } => {
                monte_carlo(&self.loss, functional, c, s, samples, seed)
            }
        };
        if !e.value.is_finite() {
            return Err(SrprError::NonFinite("population expectation"));
        }
        Ok(e)
    }

    /// Estimate that refuses results whose error estimate exceeds the tolerance.
    pub fn evaluate(&self, functional: Functional, c: f64, s: f64) -> Result<f64> {
        let e = self.estimate(functional, c, s)?;
        if e.error > self.tolerance {
            return Err(SrprError::QuadratureInaccurate {
                estimate: e.error,
                tolerance: self.tolerance,
            });
        }
        Ok(e.value)
    }

    pub fn population_u1(&self, c: f64, s: f64) -> Result<f64> {
        self.evaluate(Functional::U1, c, s)
    }

    pub fn population_u2(&self, c: f64, s: f64) -> Result<f64> {
        self.evaluate(Functional::QuadForm([1.0, 0.0]), c, s)
    }

    pub fn population_u3(&self, c: f64, s: f64) -> Result<f64> {
        self.evaluate(Functional::U3, c, s)
    }

    pub fn population_quadform(&self, c: f64, s: f64, w: [f64; 2]) -> Result<f64> {
        self.evaluate(Functional::QuadForm(w), c, s)
    }

    pub fn population_value(&self, c: f64, s: f64) -> Result<f64> {
        self.evaluate(Functional::Value, c, s)
    }

    pub fn point(&self, c: f64, s: f64) -> Result<PopulationPoint> {
        let mut error = 0.0f64;
        let mut eval = |f| -> Result<f64> {
            let e = self.estimate(f, c, s)?;
            error = error.max(e.error);
            Ok(e.value)
        };
        let f_delta = eval(Functional::Value)?;
        let u1 = eval(Functional::U1)?;
        let u2 = eval(Functional::QuadForm([1.0, 0.0]))?;
        let u3 = eval(Functional::U3)?;
        let perp = eval(Functional::GradPerp)?;
        if error > self.tolerance {
            return Err(SrprError::QuadratureInaccurate {
                estimate: error,
                tolerance: self.tolerance,
            });
        }
        Ok(PopulationPoint {
            c,
            s,
            f_delta,
            grad_norm: u3.hypot(perp),
            u1,
            u2,
            u3,
            error,
        })
    }

    /// `g(u) = E[l′_δ(u²g₂² − g₁²) g₂²]`, whose positive root is the ring radius.
    pub fn ring_function(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(SrprError::param("u", "must be positive"));
        }
        Ok(self.population_u1(0.0, u)? / (2.0 * u * u))
    }

    /// Solves `g(u) = 0` by bisection to an interval of width `1e-6`. When
    /// `g` does not change sign on the bracket it is widened geometrically a
    /// few times before giving up.
    pub fn solve_u_delta(&self, bracket: (f64, f64)) -> Result<f64> {
        let (mut lo, mut hi) = bracket;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(SrprError::param("bracket", format!("need 0 < lo < hi, got ({lo}, {hi})")));
        }
        for _ in 0..8 {
            let (glo, ghi) = (self.ring_function(lo)?, self.ring_function(hi)?);
            if glo < 0.0 && ghi > 0.0 {
                let mut failure = None;
                let root = numeric::bisect(
                    |u| match self.ring_function(u) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    lo,
                    hi,
                    1e-6,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                return root;
            }
            if glo >= 0.0 {
                lo *= 0.5;
            }
            if ghi <= 0.0 {
                hi *= 2.0;
            }
        }
        Err(SrprError::NoSignChange { lo, hi })
    }
}

/// Default search interval for the ring radius.
pub const U_DELTA_BRACKET: (f64, f64) = (0.05, 2.0);

/// Root of `h(u) = arctan u + u/(1 + u²) − π/4` on `[0.1, 1]`: the ring radius
/// as `δ → 0`.
pub fn u0_limit() -> f64 {
    numeric::bisect(u0_residual, 0.1, 1.0, 1e-12).expect("h changes sign on [0.1, 1]")
}

pub fn u0_residual(u: f64) -> f64 {
    u.atan() + u / (1.0 + u * u) - std::f64::consts::FRAC_PI_4
}

/// `lim_{δ→0} E[U₂]` on the ring of radius `u`:
/// `16u³/(π(1+u²)²) + (8/π)(arctan u − π/4 − u/(1+u²))`.
pub fn limiting_u2(u: f64) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(SrprError::param("u", format!("must be positive, got {u}")));
    }
    let pi = std::f64::consts::PI;
    let w = 1.0 + u * u;
    Ok(16.0 * u.powi(3) / (pi * w * w) + 8.0 / pi * (u.atan() - pi / 4.0 - u / w))
}

/// Ring radius and ring curvature along `x⋆` for a set of bandwidths, to
/// locate where the curvature turns negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingPoint {
    pub delta: f64,
    pub u_delta: f64,
    pub u2: f64,
}

pub fn ring_scan(probe: &PopulationProbe, deltas: &[f64]) -> Result<Vec<RingPoint>> {
    deltas
        .iter()
        .map(|&delta| {
            let p = PopulationProbe {
                loss: SmoothedLoss::new(probe.loss.kernel(), delta)?,
                ..*probe
            };
            let u_delta = p.solve_u_delta(U_DELTA_BRACKET)?;
            Ok(RingPoint {
                delta,
                u_delta,
                u2: p.population_u2(0.0, u_delta)?,
            })
        })
        .collect()
}

/// Angles in `[0, π]` where `q(θ) = (c cos θ + s sin θ)² − cos² θ` vanishes.
fn residual_zeros(c: f64, s: f64) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    if s > 0.0 {
        [1.0 - c, -1.0 - c]
            .iter()
            .map(|t| (t / s).atan().rem_euclid(pi))
            .collect()
    } else {
        vec![0.5 * pi]
    }
}

#[derive(Clone, Copy)]
enum Order {
    Value,
    First,
    Second,
}

fn radial(loss: &SmoothedLoss, order: Order, power: i32, q: f64, tol: f64) -> Estimate {
    let f = |t: f64| {
        let r = t * q;
        let l = match order {
            Order::Value => loss.value(r),
            Order::First => loss.deriv(r),
            Order::Second => loss.second_deriv(r),
        };
        0.5 * t.powi(power) * l * (-0.5 * t).exp()
    };
    let mut breaks = Vec::new();
    if q != 0.0 {
        let scale = loss.delta() / q.abs();
        breaks.extend([scale, 4.0 * scale, 16.0 * scale]);
    }
    adaptive(f, 0.0, RADIAL_END, &breaks, tol, 0.0, MAX_INTERVALS)
}

fn polar(loss: &SmoothedLoss, functional: Functional, c: f64, s: f64, tol: f64) -> Estimate {
    let inner_tol = 0.1 * tol;
    let mut inner_error = 0.0f64;
    let integrand = |theta: f64| -> f64 {
        let (sn, cs) = theta.sin_cos();
        let m = c * cs + s * sn;
        let q = m * m - cs * cs;
        let mut term = |order, power, weight: f64| {
            if weight == 0.0 {
                return 0.0;
            }
            let e = radial(loss, order, power, q, inner_tol / weight.abs().max(1.0));
            inner_error = inner_error.max(e.error * weight.abs());
            weight * e.value
        };
        match functional {
            Functional::Value => term(Order::Value, 0, 1.0),
            Functional::U1 => term(Order::First, 1, 2.0 * m * m),
            Functional::U3 => term(Order::First, 1, 2.0 * cs * m),
            Functional::GradPerp => term(Order::First, 1, 2.0 * sn * m),
            Functional::QuadForm([w0, w1]) => {
                let wt = w0 * cs + w1 * sn;
                term(Order::First, 1, 2.0 * wt * wt) + term(Order::Second, 2, 4.0 * m * m * wt * wt)
            }
        }
    };
    let pi = std::f64::consts::PI;
    let breaks = residual_zeros(c, s);
    let outer = adaptive(integrand, 0.0, pi, &breaks, pi * tol, 0.0, MAX_INTERVALS);
    Estimate {
        value: outer.value / pi,
        error: outer.error / pi + inner_error,
    }
}

fn hermite(loss: &SmoothedLoss, functional: Functional, c: f64, s: f64, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let r2 = std::f64::consts::SQRT_2;
    let total = numeric::blocked_sum_by(nodes * nodes, |k| {
        let (i, j) = (k / nodes, k % nodes);
        w[i] * w[j] * functional.pointwise(loss, c, s, r2 * x[i], r2 * x[j])
    });
    total / std::f64::consts::PI
}

fn monte_carlo(
    loss: &SmoothedLoss,
    functional: Functional,
    c: f64,
    s: f64,
    samples: usize,
    seed: u64,
) -> Estimate {
    let mut rng = stream_rng(seed, Stream::Landscape);
    let draws: Vec<f64> = (0..samples)
        .map(|_| {
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            functional.pointwise(loss, c, s, g1, g2)
        })
        .collect();
    let nf = samples as f64;
    let mean = numeric::blocked_sum(&draws) / nf;
    let var = numeric::blocked_sum_by(samples, |i| (draws[i] - mean).powi(2)) / (nf - 1.0);
    Estimate {
        value: mean,
        error: (var / nf).sqrt(),
    }
}
