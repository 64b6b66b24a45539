//! Solvers for the smoothed objective and the ℓ1 finisher.
//!
//! * [`gd_fixed`]: plain gradient descent with a constant step.
//! * [`mapg`]: monotone accelerated gradient with backtracking.
//! * [`ipl`]: inexact proximal-linear iterations on the unsmoothed objective,
//!   each subproblem solved through its box-constrained dual.
//! * [`srpr_pipeline`]: initialization, smoothed phase, optional finisher.

mod gd;
mod ipl;
mod mapg;
mod pipeline;
mod prox_linear;
mod step;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::objective::{relative_error, Objective};

pub use gd::gd_fixed;
pub use ipl::{ipl, IplConfig};
pub use mapg::mapg;
pub use pipeline::{srpr_pipeline, PipelineConfig};
pub use prox_linear::{prox_linear_step, ProxLinearStep};
pub use step::{curvature_bound, estimate_step};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepPolicy {
    Fixed(f64),
    LineSearch {
        /// First trial step; `None` asks [`estimate_step`].
        init_step: Option<f64>,
        shrink: f64,
        sufficient_decrease: f64,
    },
}

impl StepPolicy {
    pub fn line_search() -> Self {
        StepPolicy::LineSearch {
            init_step: None,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step: StepPolicy,
    pub record_trace: bool,
    /// Seed for curvature probes when the step is estimated.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 5000,
            grad_tol: 1e-10,
            step: StepPolicy::line_search(),
            record_trace: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Stalled,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max-iters",
            SolveStatus::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Smooth,
    ProxLinear,
}

/// One row per outer iteration. `objective` is `F_δ` in the smooth phase and
/// `F` in the proximal-linear phase; `objective_gap` subtracts the same
/// objective at the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub phase: Phase,
    pub objective: f64,
    pub grad_norm: Option<f64>,
    pub step_norm: Option<f64>,
    pub rel_error: Option<f64>,
    pub objective_gap: Option<f64>,
    pub wall_nanos: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub objective: f64,
    pub rel_error: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub wall_nanos: u64,
}

/// Records trace rows and ground-truth diagnostics for a run.
pub(crate) struct Recorder<'a> {
    obj: Objective<'a>,
    enabled: bool,
    start: Instant,
    x_star: Option<&'a [f64]>,
    /// `l_δ(r) − l_δ(0)` and `|r|` at the truth, per measurement.
    star_excess: Vec<f64>,
    star_abs: Vec<f64>,
    pub rows: Vec<TraceRow>,
}

impl<'a> Recorder<'a> {
    pub fn new(obj: Objective<'a>, enabled: bool) -> Self {
        let x_star = obj.instance().x_star.as_deref();
        let (star_excess, star_abs) = match (enabled, x_star) {
            (true, Some(xs)) => {
                let ax = obj.instance().ensemble.forward(xs);
                let l = obj.loss();
                (0..ax.len())
                    .map(|i| {
                        let r = obj.residual(&ax, i);
                        (l.excess(r), r.abs())
                    })
                    .unzip()
            }
            _ => (Vec::new(), Vec::new()),
        };
        Recorder {
            obj,
            enabled,
            start: Instant::now(),
            x_star,
            star_excess,
            star_abs,
            rows: Vec::new(),
        }
    }

    pub fn elapsed(&self) -> u64 {
        self.start.elapsed().as_nanos() as u64
    }

    pub fn rel_error(&self, x: &[f64]) -> Option<f64> {
        self.x_star.and_then(|xs| relative_error(x, xs).ok())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        iter: usize,
        phase: Phase,
        x: &[f64],
        ax: &[f64],
        objective: f64,
        grad_norm: Option<f64>,
        step_norm: Option<f64>,
    ) {
        if !self.enabled {
            return;
        }
        let objective_gap = if self.star_excess.is_empty() {
            None
        } else {
            let inv_n = 1.0 / ax.len() as f64;
            let obj = &self.obj;
            let gap = match phase {
                Phase::Smooth => {
                    let l = obj.loss();
                    crate::numeric::blocked_sum_by(ax.len(), |i| {
                        l.excess(obj.residual(ax, i)) - self.star_excess[i]
                    })
                }
                Phase::ProxLinear => crate::numeric::blocked_sum_by(ax.len(), |i| {
                    obj.residual(ax, i).abs() - self.star_abs[i]
                }),
            };
            Some(gap * inv_n)
        };
        let row = TraceRow {
            iter,
            phase,
            objective,
            grad_norm,
            step_norm,
            rel_error: self.rel_error(x),
            objective_gap,
            wall_nanos: self.elapsed(),
        };
        self.rows.push(row);
    }
}
