//! Monotone accelerated gradient method (Li and Lin, 2015, Algorithm 1)
//! specialized to a smooth objective.
//!
//! Each iteration takes a backtracking gradient step from the extrapolated
//! point `y` and another from the current iterate `x`, and keeps whichever
//! lands lower, so the objective never increases. Momentum restarts whenever
//! the extrapolated step fails to improve on `x`.

use super::{estimate_step, Phase, Recorder, SolveConfig, SolveResult, SolveStatus, StepPolicy};
use crate::error::{check_len, Result, SrprError};
use crate::numeric;
use crate::objective::Objective;

const MAX_HALVINGS: usize = 60;
/// Consecutive accepted steps without a strict decrease before giving up;
/// this happens once decreases fall below rounding.
const STAGNATION_LIMIT: usize = 5;

struct Point {
    x: Vec<f64>,
    ax: Vec<f64>,
    /// `F_δ(x) − l_δ(0)`; comparisons use this shifted value.
    f: f64,
}

impl Point {
    fn at(obj: &Objective<'_>, x: Vec<f64>) -> Self {
        let ax = obj.instance().ensemble.forward(&x);
        let f = obj.f_delta_shifted_from_products(&ax);
        Point { x, ax, f }
    }
}

/// Backtracking from `from` along `−g` until `F(x − αg) ≤ F(x) − c·α‖g‖²`.
fn line_search(
    obj: &Objective<'_>,
    from: &Point,
    g: &[f64],
    alpha0: f64,
    shrink: f64,
    c: f64,
) -> Option<(Point, f64)> {
    let g2 = numeric::dot(g, g);
    let mut alpha = alpha0;
    for _ in 0..=MAX_HALVINGS {
        let trial = Point::at(obj, numeric::axpy(&from.x, -alpha, g));
        if trial.f <= from.f - c * alpha * g2 {
            return Some((trial, alpha));
        }
        alpha *= shrink;
    }
    None
}

pub fn mapg(obj: &Objective<'_>, x0: &[f64], config: &SolveConfig) -> Result<SolveResult> {
    check_len(obj.p(), x0.len())?;
    let (init_step, shrink, c_ls) = match config.step {
        StepPolicy::LineSearch {
            init_step,
            shrink,
            sufficient_decrease,
        } => (init_step, shrink, sufficient_decrease),
        StepPolicy::Fixed(_) => {
            return Err(SrprError::param("step", "accelerated method needs a line search"))
        }
    };
    if !(shrink > 0.0 && shrink < 1.0 && sufficient_decrease_ok(c_ls)) {
        return Err(SrprError::param(
            "step",
            "shrink and sufficient-decrease factors must lie in (0, 1)",
        ));
    }
    let mut alpha = match init_step {
        Some(a) if a > 0.0 && a.is_finite() => a,
        Some(a) => return Err(SrprError::param("init_step", format!("must be positive, got {a}"))),
        None => estimate_step(obj, 4, config.seed)?,
    };

    let mut rec = Recorder::new(*obj, config.record_trace);
    let mut cur = Point::at(obj, x0.to_vec());
    let mut g = obj.gradient_from_products(&cur.ax);
    let mut x_prev = cur.x.clone();
    let mut z = cur.x.clone();
    let (mut t_prev, mut t) = (0.0f64, 1.0f64);
    let mut bb: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut last_step = None;
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;
    let mut stagnant = 0usize;
    let floor = obj.loss().value(0.0);

    for k in 0..=config.max_iters {
        let gn = numeric::norm(&g);
        // Adding the constant back preserves the order of the shifted values.
        let objective = cur.f + floor;
        rec.push(k, Phase::Smooth, &cur.x, &cur.ax, objective, Some(gn), last_step);
        iterations = k;
        if !cur.f.is_finite() || !gn.is_finite() {
            status = SolveStatus::Stalled;
            break;
        }
        if gn <= config.grad_tol || cur.f == 0.0 {
            status = SolveStatus::Converged;
            break;
        }
        if stagnant >= STAGNATION_LIMIT {
            status = SolveStatus::Stalled;
            break;
        }
        if k == config.max_iters {
            break;
        }

        // Barzilai–Borwein guess for the first trial step.
        if let Some((px, pg)) = &bb {
            let s = numeric::sub(&cur.x, px);
            let yv = numeric::sub(&g, pg);
            let sy = numeric::dot(&s, &yv);
            let ss = numeric::dot(&s, &s);
            alpha = if sy > 0.0 && ss > 0.0 {
                (ss / sy).clamp(1e-12 * alpha, 1e6 * alpha)
            } else {
                2.0 * alpha
            };
        }

        let y: Vec<f64> = (0..cur.x.len())
            .map(|i| {
                cur.x[i] + (t_prev / t) * (z[i] - cur.x[i]) + ((t_prev - 1.0) / t) * (cur.x[i] - x_prev[i])
            })
            .collect();
        let y_is_x = y == cur.x;
        let from_y = if !y_is_x {
            let py = Point::at(obj, y);
            let gy = obj.gradient_from_products(&py.ax);
            line_search(obj, &py, &gy, alpha, shrink, c_ls)
        } else {
            None
        };
        let from_x = line_search(obj, &cur, &g, alpha, shrink, c_ls);

        let z_improves = if y_is_x {
            from_x.is_some()
        } else {
            from_y.as_ref().is_some_and(|(p, _)| p.f <= cur.f)
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let (next, used) = match (from_y, from_x) {
            (Some(zy), Some(vx)) => {
                z = zy.0.x.clone();
                if zy.0.f <= vx.0.f {
                    zy
                } else {
                    vx
                }
            }
            (Some(zy), None) => {
                z = zy.0.x.clone();
                zy
            }
            (None, Some(vx)) => {
                z = vx.0.x.clone();
                vx
            }
            (None, None) => {
                status = SolveStatus::Stalled;
                break;
            }
        };
        alpha = used;
        if z_improves {
            t_prev = t;
            t = t_next;
        } else {
            t_prev = 0.0;
            t = 1.0;
        }

        if next.f < cur.f {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        last_step = Some(numeric::dist(&next.x, &cur.x));
        bb = Some((cur.x.clone(), g.clone()));
        x_prev = std::mem::replace(&mut cur, next).x;
        if !z_improves {
            z = cur.x.clone();
            x_prev = cur.x.clone();
        }
        g = obj.gradient_from_products(&cur.ax);
    }

    Ok(SolveResult {
        rel_error: rec.rel_error(&cur.x),
        objective: cur.f + floor,
        x: cur.x,
        status,
        iterations,
        wall_nanos: rec.elapsed(),
        trace: rec.rows,
    })
}

fn sufficient_decrease_ok(c: f64) -> bool {
    c > 0.0 && c < 1.0
}
