use super::{Phase, Recorder, SolveConfig, SolveResult, SolveStatus, StepPolicy};
use crate::error::{check_len, Result, SrprError};
use crate::numeric;
use crate::objective::Objective;

/// `x_{k+1} = x_k − t ∇F_δ(x_k)` until `‖∇F_δ‖ ≤ grad_tol`.
pub fn gd_fixed(obj: &Objective<'_>, x0: &[f64], config: &SolveConfig) -> Result<SolveResult> {
    check_len(obj.p(), x0.len())?;
    let t = match config.step {
        StepPolicy::Fixed(t) if t >= 0.0 && t.is_finite() => t,
        StepPolicy::Fixed(t) => {
            return Err(SrprError::param("step", format!("must be finite and >= 0, got {t}")))
        }
        StepPolicy::LineSearch { .. } => {
            return Err(SrprError::param("step", "gradient descent needs a fixed step"))
        }
    };
    let mut rec = Recorder::new(*obj, config.record_trace);
    let mut x = x0.to_vec();
    let mut status = SolveStatus::MaxIters;
    let mut objective = f64::NAN;
    let mut iterations = 0;
    let mut last_step = None;
    for k in 0..=config.max_iters {
        let ax = obj.products(&x)?;
        objective = obj.f_delta_from_products(&ax);
        let g = obj.gradient_from_products(&ax);
        let gn = numeric::norm(&g);
        rec.push(k, Phase::Smooth, &x, &ax, objective, Some(gn), last_step);
        iterations = k;
        if !objective.is_finite() || !gn.is_finite() {
            status = SolveStatus::Stalled;
            break;
        }
        if gn <= config.grad_tol {
            status = SolveStatus::Converged;
            break;
        }
        if k == config.max_iters {
            break;
        }
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= t * gi);
        last_step = Some(t * gn);
    }
    Ok(SolveResult {
        rel_error: rec.rel_error(&x),
        x,
        status,
        iterations,
        objective,
        wall_nanos: rec.elapsed(),
        trace: rec.rows,
    })
}
