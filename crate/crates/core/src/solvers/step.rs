use rand::Rng;

use crate::error::{Result, SrprError};
use crate::initialization::robust_norm_estimate;
use crate::numeric;
use crate::objective::Objective;
use crate::rng::{stream_rng, Stream};

/// Largest eigenvalue of `(1/n) Σ [2 + 8K(0)(aᵢᵀx)²/δ] aᵢaᵢᵀ`.
///
/// Since `l′_δ ≤ 1` and `l″_δ ≤ 2K(0)/δ`, this matrix dominates
/// `∇²F_δ(x)` whatever the measurements are, so it also bounds the curvature
/// near `±x⋆`, where the residuals vanish and the Hessian reaches its `1/δ`
/// scale.
pub fn curvature_bound(obj: &Objective<'_>, x: &[f64], seed: u64) -> Result<f64> {
    let ax = obj.products(x)?;
    let loss = obj.loss();
    let peak = 8.0 * loss.kernel().density(0.0) / loss.delta();
    let inv_n = 1.0 / obj.n() as f64;
    let weights: Vec<f64> = ax.iter().map(|v| inv_n * (2.0 + peak * v * v)).collect();
    let ens = &obj.instance().ensemble;
    let op = |w: &[f64]| -> Vec<f64> {
        let mut aw = ens.forward(w);
        aw.iter_mut().zip(&weights).for_each(|(a, h)| *a *= h);
        ens.adjoint(&aw)
    };
    let mut rng = stream_rng(seed, Stream::Probe);
    let start = numeric::unit_sphere(&mut rng, obj.p());
    let res = numeric::power_iteration(op, start, 100, 1e-4);
    if !res.eigenvalue.is_finite() {
        return Err(SrprError::NonFinite("curvature estimate"));
    }
    Ok(res.eigenvalue)
}

/// Step `t = 1/L̂` with `L̂` the largest [`curvature_bound`] over `probes`
/// points drawn uniformly from the ball of radius `4r̂`, `r̂` being the
/// median-based estimate of `‖x⋆‖`.
pub fn estimate_step(obj: &Objective<'_>, probes: usize, seed: u64) -> Result<f64> {
    if probes == 0 {
        return Err(SrprError::param("probes", "need at least one probe"));
    }
    let p = obj.p();
    let radius = 4.0 * robust_norm_estimate(obj.instance()).max(f64::MIN_POSITIVE);
    let mut rng = stream_rng(seed, Stream::Probe);
    let mut worst = 0.0f64;
    for j in 0..probes {
        let dir = numeric::unit_sphere(&mut rng, p);
        let u: f64 = rng.random();
        let x = numeric::scale(&dir, radius * u.powf(1.0 / p as f64));
        let probe_seed = seed.wrapping_add(j as u64 + 1);
        worst = worst.max(curvature_bound(obj, &x, probe_seed)?);
    }
    if !(worst > 0.0) {
        return Err(SrprError::NonFinite("curvature estimate"));
    }
    Ok(1.0 / worst)
}
