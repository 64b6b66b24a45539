//! Proximal-linear subproblem
//!
//! ```text
//! min_d G(d) = (1/n) Σ |cᵢ + gᵢᵀd| + (β/2)‖d‖²,   cᵢ = (aᵢᵀx)² − bᵢ,  gᵢ = 2(aᵢᵀx)aᵢ
//! ```
//!
//! solved through its dual
//!
//! ```text
//! max_{λ ∈ [−1/n, 1/n]ⁿ} D(λ) = λᵀc − ‖Jᵀλ‖² / (2β),   J = diag(2Ax) A
//! ```
//!
//! by accelerated projected gradient ascent with adaptive restart. The primal
//! point `d(λ) = −Jᵀλ/β` is recovered from every dual iterate, and the loop
//! stops once `G(d(λ)) − D(λ) ≤ ε`.

use crate::error::{check_len, Result, SrprError};
use crate::measurement::Instance;
use crate::numeric::{self, blocked_sum_by};
use crate::rng::{stream_rng, Stream};

const GAP_CHECK_EVERY: usize = 5;
const DEFAULT_MAX_INNER: usize = 50_000;

#[derive(Debug, Clone)]
pub struct ProxLinearStep {
    /// `x + d`
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    /// Dual certificate; reusable as a warm start.
    pub lambda: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// One proximal-linear step from `x` with penalty `beta`, solved to duality
/// gap `inner_eps`.
pub fn prox_linear_step(
    instance: &Instance,
    x: &[f64],
    beta: f64,
    inner_eps: f64,
) -> Result<ProxLinearStep> {
    prox_linear_step_with(instance, x, beta, inner_eps, DEFAULT_MAX_INNER, None)
}

struct Subproblem<'a> {
    instance: &'a Instance,
    c: Vec<f64>,
    s: Vec<f64>,
    beta: f64,
    inv_n: f64,
}

impl Subproblem<'_> {
    /// `Jᵀλ`
    fn jt(&self, lambda: &[f64]) -> Vec<f64> {
        let v: Vec<f64> = lambda.iter().zip(&self.s).map(|(l, s)| l * s).collect();
        self.instance.ensemble.adjoint(&v)
    }

    /// `Jd`
    fn j(&self, d: &[f64]) -> Vec<f64> {
        let mut ad = self.instance.ensemble.forward(d);
        ad.iter_mut().zip(&self.s).for_each(|(a, s)| *a *= s);
        ad
    }

    fn dual_value(&self, lambda: &[f64], jtl: &[f64]) -> f64 {
        blocked_sum_by(lambda.len(), |i| lambda[i] * self.c[i])
            - numeric::dot(jtl, jtl) / (2.0 * self.beta)
    }

    fn primal_value(&self, d: &[f64], jd: &[f64]) -> f64 {
        blocked_sum_by(jd.len(), |i| (self.c[i] + jd[i]).abs()) * self.inv_n
            + 0.5 * self.beta * numeric::dot(d, d)
    }

    fn project(&self, lambda: &mut [f64]) {
        let r = self.inv_n;
        lambda.iter_mut().for_each(|l| *l = l.clamp(-r, r));
    }
}

pub(crate) fn prox_linear_step_with(
    instance: &Instance,
    x: &[f64],
    beta: f64,
    inner_eps: f64,
    max_inner: usize,
    warm_start: Option<&[f64]>,
) -> Result<ProxLinearStep> {
    check_len(instance.p(), x.len())?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(SrprError::param("beta", format!("must be positive, got {beta}")));
    }
    if !(inner_eps > 0.0) {
        return Err(SrprError::param("inner_eps", format!("must be positive, got {inner_eps}")));
    }
    let n = instance.n();
    let ax = instance.ensemble.forward(x);
    let sub = Subproblem {
        instance,
        c: ax.iter().zip(&instance.b).map(|(a, b)| a * a - b).collect(),
        s: ax.iter().map(|a| 2.0 * a).collect(),
        beta,
        inv_n: 1.0 / n as f64,
    };

    // ‖J‖² = λ_max(JᵀJ); the start vector is fixed so that x and −x agree.
    let start = numeric::unit_sphere(&mut stream_rng(0, Stream::Probe), instance.p());
    let jnorm2 = numeric::power_iteration(|v| sub.jt(&sub.j(v)), start, 200, 1e-6).eigenvalue;
    let finish = |lambda: Vec<f64>, jtl: Vec<f64>, iterations: usize| -> Result<ProxLinearStep> {
        let d: Vec<f64> = jtl.iter().map(|v| -v / beta).collect();
        let jd = sub.j(&d);
        let primal = sub.primal_value(&d, &jd);
        let dual = sub.dual_value(&lambda, &jtl);
        if !primal.is_finite() || !dual.is_finite() {
            return Err(SrprError::NonFinite("proximal-linear dual value"));
        }
        Ok(ProxLinearStep {
            x: numeric::add(x, &d),
            d,
            lambda,
            primal,
            dual,
            gap: primal - dual,
            iterations,
        })
    };

    if !(jnorm2 > 0.0) {
        // J = 0 (x = 0): G(d) = mean|c| + β/2‖d‖², minimized at d = 0.
        let lambda: Vec<f64> = sub.c.iter().map(|c| c.signum() * sub.inv_n).collect();
        return finish(lambda, vec![0.0; instance.p()], 0);
    }
    let step = beta / (1.02 * jnorm2);

    let mut lambda = match warm_start {
        Some(w) if w.len() == n => w.to_vec(),
        _ => vec![0.0; n],
    };
    sub.project(&mut lambda);
    let mut prev = lambda.clone();
    let mut theta = 1.0f64;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;

    for it in 0..max_inner {
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / t_next;
        let mu: Vec<f64> = lambda
            .iter()
            .zip(&prev)
            .map(|(l, p)| l + momentum * (l - p))
            .collect();
        // ∇D(μ) = c + J d(μ)
        let jtm = sub.jt(&mu);
        let dm: Vec<f64> = jtm.iter().map(|v| -v / beta).collect();
        let jdm = sub.j(&dm);
        let mut next: Vec<f64> = (0..n).map(|i| mu[i] + step * (sub.c[i] + jdm[i])).collect();
        sub.project(&mut next);

        // restart when the step opposes the direction of travel
        let align = blocked_sum_by(n, |i| (next[i] - mu[i]) * (next[i] - lambda[i]));
        if align < 0.0 {
            theta = 1.0;
        } else {
            theta = t_next;
        }
        prev = std::mem::replace(&mut lambda, next);

        if it % GAP_CHECK_EVERY == GAP_CHECK_EVERY - 1 || it + 1 == max_inner {
            let jtl = sub.jt(&lambda);
            let d: Vec<f64> = jtl.iter().map(|v| -v / beta).collect();
            let jd = sub.j(&d);
            let gap = sub.primal_value(&d, &jd) - sub.dual_value(&lambda, &jtl);
            if !gap.is_finite() {
                return Err(SrprError::NonFinite("proximal-linear dual value"));
            }
            if best.as_ref().is_none_or(|(g, _, _)| gap < *g) {
                best = Some((gap, lambda.clone(), jtl));
            }
            if gap <= inner_eps {
                let (_, l, j) = best.expect("just stored");
                return finish(l, j, it + 1);
            }
        }
    }
    let (gap, l, j) = best.expect("at least one gap check");
    log::debug!("proximal-linear subproblem stopped at gap {gap:.3e} after {max_inner} iterations");
    finish(l, j, max_inner)
}
