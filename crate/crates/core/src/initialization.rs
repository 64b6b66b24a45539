//! Starting points: random points on scaled spheres and the small-measurement
//! spectral estimator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrprError};
use crate::measurement::Instance;
use crate::numeric;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusLaw {
    /// Radius uniform on `[0, max]`.
    UniformScaled { max: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSpec {
    Random { radius: RadiusLaw },
    Spectral { quantile: f64, power_iters: usize },
}

impl InitSpec {
    pub fn random() -> Self {
        InitSpec::Random {
            radius: RadiusLaw::UniformScaled { max: 4.0 },
        }
    }

    pub fn spectral() -> Self {
        InitSpec::Spectral {
            quantile: 0.5,
            power_iters: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InitSpec::Random { radius } => match radius {
                RadiusLaw::UniformScaled { max } if !(max > 0.0 && max.is_finite()) => {
                    Err(SrprError::param("radius", format!("max must be positive, got {max}")))
                }
                RadiusLaw::Fixed(r) if !(r >= 0.0 && r.is_finite()) => {
                    Err(SrprError::param("radius", format!("must be nonnegative, got {r}")))
                }
                _ => Ok(()),
            },
            InitSpec::Spectral { quantile, power_iters } => {
                if !(quantile > 0.0 && quantile < 1.0) {
                    return Err(SrprError::param(
                        "quantile",
                        format!("must lie in (0, 1), got {quantile}"),
                    ));
                }
                if power_iters == 0 {
                    return Err(SrprError::param("power_iters", "must be at least 1"));
                }
                Ok(())
            }
        }
    }
}

/// Uniform direction times a radius drawn from `law`.
pub fn random_init(law: RadiusLaw, p: usize, seed: u64) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(SrprError::param("p", format!("need p >= 2, got {p}")));
    }
    InitSpec::Random { radius: law }.validate()?;
    let mut rng = stream_rng(seed, Stream::Init);
    let dir = numeric::unit_sphere(&mut rng, p);
    let r = match law {
        RadiusLaw::UniformScaled { max } => rng.random_range(0.0..=max),
        RadiusLaw::Fixed(r) => r,
    };
    Ok(numeric::scale(&dir, r))
}

/// Median of the χ² distribution with one degree of freedom, the root of
/// `erf(√(x/2)) = 1/2`.
pub fn chi2_1_median() -> f64 {
    numeric::bisect(|x| libm::erf((0.5 * x).sqrt()) - 0.5, 0.1, 1.0, 1e-14)
        .expect("erf bracket is valid")
}

/// `‖x⋆‖` estimated as `√(median(b) / (m₀σ²))`, where `m₀` is the χ²₁ median
/// and `σ²` the per-entry variance of the ensemble.
pub fn robust_norm_estimate(instance: &Instance) -> f64 {
    let med = numeric::median(&instance.b).max(0.0);
    (med / (chi2_1_median() * instance.ensemble.entry_variance())).sqrt()
}

/// Spectral estimate together with solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralInit {
    pub x0: Vec<f64>,
    pub direction: Vec<f64>,
    pub scale: f64,
    /// Smallest eigenvalue of the selected second-moment matrix.
    pub eigenvalue: f64,
    /// `‖Mv − λv‖` at return.
    pub residual: f64,
    pub iterations: usize,
    pub selected: usize,
    /// Quantile actually used, after any widening.
    pub quantile: f64,
}

/// Measurements with small `bᵢ` come from sensing vectors nearly orthogonal
/// to `x⋆`, so the bottom eigenvector of `M = mean{aᵢaᵢᵀ : bᵢ ≤ q-quantile}`
/// estimates the direction of `x⋆`. The norm comes from `median(b)`.
pub fn spectral_init(
    instance: &Instance,
    quantile: f64,
    max_iters: usize,
    seed: u64,
) -> Result<SpectralInit> {
    InitSpec::Spectral {
        quantile,
        power_iters: max_iters,
    }
    .validate()?;
    let (p, n) = (instance.p(), instance.n());
    if n < 2 * p {
        log::warn!("spectral init with n = {n} < 2p = {}", 2 * p);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| instance.b[i].total_cmp(&instance.b[j]).then(i.cmp(&j)));
    let mut q = quantile;
    let mut count = selection_size(q, n);
    while count < p && count < n {
        q = 0.5 * (q + 1.0);
        count = selection_size(q, n);
        log::warn!("spectral selection smaller than p; widening quantile to {q:.4}");
    }
    let mut mask = vec![0.0; n];
    for &i in &order[..count] {
        mask[i] = 1.0;
    }

    let ens = &instance.ensemble;
    let inv = 1.0 / count as f64;
    let apply_m = |v: &[f64]| -> Vec<f64> {
        let mut av = ens.forward(v);
        av.iter_mut().zip(&mask).for_each(|(a, m)| *a *= m * inv);
        ens.adjoint(&av)
    };

    let mut rng = stream_rng(seed, Stream::Init);
    let start = numeric::unit_sphere(&mut rng, p);
    let top = numeric::power_iteration(apply_m, start.clone(), 100, 1e-4);
    let lambda_max = top.eigenvalue;
    let shift = 1.05 * lambda_max;
    let shifted = |v: &[f64]| -> Vec<f64> {
        let mv = apply_m(v);
        v.iter().zip(&mv).map(|(a, b)| shift * a - b).collect()
    };
    let bottom = numeric::power_iteration(shifted, start, max_iters, 1e-10 * lambda_max / shift);
    let eigenvalue = shift - bottom.eigenvalue;
    if bottom.residual > 1e-8 * lambda_max {
        log::debug!(
            "spectral eigenvector residual {:.2e} after {} iterations",
            bottom.residual,
            bottom.iterations
        );
    }

    let scale = robust_norm_estimate(instance);
    Ok(SpectralInit {
        x0: numeric::scale(&bottom.vector, scale),
        direction: bottom.vector,
        scale,
        eigenvalue,
        residual: bottom.residual,
        iterations: bottom.iterations,
        selected: count,
        quantile: q,
    })
}

fn selection_size(q: f64, n: usize) -> usize {
    ((q * n as f64).ceil() as usize).clamp(1, n)
}

/// Starting point for `spec`; spectral runs use the instance and `seed` for
/// the power-iteration start.
pub fn initial_point(instance: &Instance, spec: InitSpec, seed: u64) -> Result<Vec<f64>> {
    match spec {
        InitSpec::Random { radius } => random_init(radius, instance.p(), seed),
        InitSpec::Spectral {
            quantile,
            power_iters,
        } => Ok(spectral_init(instance, quantile, power_iters, seed)?.x0),
    }
}
