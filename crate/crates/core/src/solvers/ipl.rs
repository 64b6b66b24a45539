use serde::{Deserialize, Serialize};

use super::prox_linear::prox_linear_step_with;
use super::{Phase, Recorder, SolveResult, SolveStatus};
use crate::error::{check_len, Result, SrprError};
use crate::measurement::Instance;
use crate::numeric;
use crate::objective::Objective;
use crate::smoothed_loss::{KernelKind, SmoothedLoss};

/// Inexact proximal-linear settings. Subproblem `k` is solved to duality gap
/// `ε_k = eps0 · eps_decay^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IplConfig {
    /// Initial penalty; `None` uses `‖(1/n)AᵀA‖₂`, the scale at which the
    /// linearization error of `F` is bounded by the penalty.
    pub beta: Option<f64>,
    pub beta_growth: f64,
    /// `None` uses `1e-3 · F(x₀)`.
    pub eps0: Option<f64>,
    pub eps_decay: f64,
    /// Total subproblem solves, accepted or not.
    pub max_outer: usize,
    /// Stop once `‖x_{k+1} − x_k‖` falls below this; `None` uses
    /// `1e-10 · max(1, ‖x₀‖)`.
    pub stop_tol: Option<f64>,
    pub max_inner: usize,
    pub record_trace: bool,
}

impl Default for IplConfig {
    fn default() -> Self {
        IplConfig {
            beta: None,
            beta_growth: 2.0,
            eps0: None,
            eps_decay: 0.5,
            max_outer: 200,
            stop_tol: None,
            max_inner: 50_000,
            record_trace: true,
        }
    }
}

impl IplConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(SrprError::param("beta", format!("must be positive, got {b}")));
            }
        }
        if !(self.beta_growth > 1.0) {
            return Err(SrprError::param("beta_growth", "must exceed 1"));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay < 1.0) {
            return Err(SrprError::param("eps_decay", "must lie in (0, 1)"));
        }
        if self.eps0.is_some_and(|e| !(e > 0.0)) {
            return Err(SrprError::param("eps0", "must be positive"));
        }
        if self.stop_tol.is_some_and(|e| !(e > 0.0)) {
            return Err(SrprError::param("stop_tol", "must be positive"));
        }
        if self.max_inner == 0 {
            return Err(SrprError::param("max_inner", "must be at least 1"));
        }
        Ok(())
    }
}

/// Minimizes `F(x) = (1/n)Σ|(aᵢᵀx)² − bᵢ|` by proximal-linear steps. A step
/// is accepted when `F(x⁺) ≤ F(x) − (β/4)‖x⁺ − x‖²`; otherwise `β` grows and
/// the subproblem is re-solved.
pub fn ipl(instance: &Instance, x0: &[f64], config: &IplConfig) -> Result<SolveResult> {
    check_len(instance.p(), x0.len())?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SrprError::NonFinite("initial point"));
    }
    config.validate()?;
    // The loss only matters for the smoothed objective, which this phase never reads.
    let obj = Objective::new(instance, SmoothedLoss::new(KernelKind::PseudoHuber, 1.0)?);
    let mut rec = Recorder::new(obj, config.record_trace);

    let mut x = x0.to_vec();
    let mut ax = instance.ensemble.forward(&x);
    let mut f = obj.f_ell1_from_products(&ax);
    let eps0 = config.eps0.unwrap_or(1e-3 * f);
    let eps_floor = (1e-14 * f).max(f64::MIN_POSITIVE);
    let stop_tol = config
        .stop_tol
        .unwrap_or(1e-10 * numeric::norm(x0).max(1.0));
    let mut beta = config
        .beta
        .unwrap_or_else(|| instance.ensemble.covariance_norm());
    let mut warm: Option<Vec<f64>> = None;
    let mut accepted = 0usize;
    let mut status = SolveStatus::MaxIters;
    rec.push(0, Phase::ProxLinear, &x, &ax, f, None, None);

    for _ in 0..config.max_outer {
        let eps = (eps0 * config.eps_decay.powi(accepted as i32)).max(eps_floor);
        let step = prox_linear_step_with(instance, &x, beta, eps, config.max_inner, warm.as_deref())?;
        let dn = numeric::norm(&step.d);
        if dn <= stop_tol {
            status = SolveStatus::Converged;
            break;
        }
        let ax_new = instance.ensemble.forward(&step.x);
        let f_new = obj.f_ell1_from_products(&ax_new);
        if !f_new.is_finite() {
            status = SolveStatus::Stalled;
            break;
        }
        if f_new <= f - 0.25 * beta * dn * dn {
            x = step.x;
            ax = ax_new;
            f = f_new;
            accepted += 1;
            warm = Some(step.lambda);
            rec.push(accepted, Phase::ProxLinear, &x, &ax, f, None, Some(dn));
            if f == 0.0 {
                status = SolveStatus::Converged;
                break;
            }
        } else {
            beta *= config.beta_growth;
            if !beta.is_finite() {
                status = SolveStatus::Stalled;
                break;
            }
        }
    }

    Ok(SolveResult {
        rel_error: rec.rel_error(&x),
        x,
        status,
        iterations: accepted,
        objective: f,
        wall_nanos: rec.elapsed(),
        trace: rec.rows,
    })
}
