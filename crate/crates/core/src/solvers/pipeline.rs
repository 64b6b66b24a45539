use serde::{Deserialize, Serialize};

use super::{ipl, mapg, IplConfig, SolveConfig, SolveResult};
use crate::error::Result;
use crate::initialization::{initial_point, InitSpec};
use crate::measurement::Instance;
use crate::objective::Objective;
use crate::smoothed_loss::SmoothedLoss;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub smooth: SolveConfig,
    pub finisher: IplConfig,
    /// Seed for the random initial point or the spectral power-iteration start.
    pub init_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            smooth: SolveConfig::default(),
            finisher: IplConfig::default(),
            init_seed: 0,
        }
    }
}

/// Initialization, then the accelerated method on `F_δ`, then (optionally)
/// proximal-linear iterations on `F` from the smoothed minimizer. The merged
/// trace numbers iterations consecutively and tags each row with its phase;
/// wall times are measured from the start of the smoothed phase.
pub fn srpr_pipeline(
    instance: &Instance,
    loss: SmoothedLoss,
    init: InitSpec,
    finisher: bool,
    config: &PipelineConfig,
) -> Result<SolveResult> {
    init.validate()?;
    let start = std::time::Instant::now();
    let x0 = initial_point(instance, init, config.init_seed)?;
    let obj = Objective::new(instance, loss);
    let smooth = mapg(&obj, &x0, &config.smooth)?;
    if !finisher {
        let mut out = smooth;
        out.wall_nanos = start.elapsed().as_nanos() as u64;
        return Ok(out);
    }

    let offset_iter = smooth.iterations + 1;
    let offset_nanos = smooth.wall_nanos;
    let polish = ipl(instance, &smooth.x, &config.finisher)?;
    let mut trace = smooth.trace;
    trace.extend(polish.trace.into_iter().map(|mut row| {
        row.iter += offset_iter;
        row.wall_nanos += offset_nanos;
        row
    }));
    Ok(SolveResult {
        x: polish.x,
        status: polish.status,
        iterations: smooth.iterations + polish.iterations,
        objective: polish.objective,
        rel_error: polish.rel_error,
        trace,
        wall_nanos: start.elapsed().as_nanos() as u64,
    })
}
