use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, DeltaPolicy, EnsembleKind, ExperimentConfig, FinisherPolicy};
use crate::error::{Result, SrprError};
use crate::initialization::{initial_point, robust_norm_estimate, InitSpec};
use crate::measurement::{generate_instance, synthetic_signal, CorruptionSpec, Instance, SensingEnsemble};
use crate::numeric;
use crate::objective::{relative_error, Objective};
use crate::rng::derive_seed;
use crate::smoothed_loss::SmoothedLoss;
use crate::solvers::{ipl, srpr_pipeline, IplConfig, PipelineConfig, SolveConfig};

/// `δ = δ₀ ‖(1/n)AᵀA‖₂ r²` for a signal-norm estimate `r`.
pub fn delta_heuristic(instance: &Instance, delta0: f64, xstar_norm_estimate: f64) -> Result<f64> {
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(SrprError::param("delta0", format!("must be positive, got {delta0}")));
    }
    if !(xstar_norm_estimate > 0.0 && xstar_norm_estimate.is_finite()) {
        return Err(SrprError::param("norm estimate", "must be positive"));
    }
    Ok(delta0 * instance.ensemble.covariance_norm() * xstar_norm_estimate.powi(2))
}

/// Outcome of one method on one instance.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub x: Option<Vec<f64>>,
    /// Solver status, or `"error"` when the run failed outright.
    pub status: String,
    pub rel_error: f64,
    pub iterations: usize,
    pub wall_nanos: u64,
}

/// Solver settings shared by every run of a sweep or image task.
#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub smooth: SolveConfig,
    pub ipl: IplConfig,
    pub finisher: bool,
}

/// Runs `algorithm` from `init` on `instance`; failures are reported in the
/// outcome rather than returned.
pub fn run_algorithm(
    instance: &Instance,
    loss: SmoothedLoss,
    algorithm: Algorithm,
    init: InitSpec,
    settings: &RunSettings,
    seed: u64,
) -> Outcome {
    let start = Instant::now();
    let result = match algorithm {
        Algorithm::SrprRi | Algorithm::SrprSi => {
            let config = PipelineConfig {
                smooth: SolveConfig { seed, ..settings.smooth },
                finisher: settings.ipl,
                init_seed: seed,
            };
            srpr_pipeline(instance, loss, init, settings.finisher, &config)
        }
        _ => initial_point(instance, init, seed).and_then(|x0| {
            let mut config = settings.ipl;
            if algorithm.is_pl() {
                let f0 = Objective::new(instance, loss).f_ell1(&x0)?;
                config.eps0 = Some((1e-9 * f0).max(f64::MIN_POSITIVE));
            }
            ipl(instance, &x0, &config)
        }),
    };
    let wall_nanos = start.elapsed().as_nanos() as u64;
    match result {
        Ok(r) => Outcome {
            rel_error: match &instance.x_star {
                Some(xs) => relative_error(&r.x, xs).unwrap_or(f64::NAN),
                None => f64::NAN,
            },
            status: r.status.to_string(),
            iterations: r.iterations,
            wall_nanos,
            x: Some(r.x),
        },
        Err(e) => {
            log::warn!("{algorithm} failed: {e}");
            Outcome {
                x: None,
                status: "error".into(),
                rel_error: f64::NAN,
                iterations: 0,
                wall_nanos,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub cell: usize,
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub p_fail: f64,
    pub corruption: String,
    pub gamma: f64,
    pub delta: f64,
    pub algorithm: String,
    pub replicate: usize,
    pub seed: u64,
    pub status: String,
    pub iterations: usize,
    pub rel_error: f64,
    pub success: bool,
    pub wall_nanos: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub p_fail: f64,
    pub algorithm: String,
    pub replicates: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_rel_error: f64,
    pub median_wall_nanos: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResults {
    /// Cell-major, then replicate, then algorithm in config order.
    pub runs: Vec<RunRow>,
    /// Cell-major, then algorithm in config order.
    pub summary: Vec<SummaryRow>,
}

impl SweepResults {
    pub fn write_runs_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.runs)
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.summary)
    }

    /// Success rate of `algorithm` in `cell`.
    pub fn success_rate(&self, cell: usize, algorithm: Algorithm) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.cell == cell && r.algorithm == algorithm.name())
            .map(|r| r.success_rate)
    }
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

fn save_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| SrprError::Format(format!("cannot create {}: {e}", path.display())))?;
    write_rows(file, rows)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    index: usize,
    k: usize,
    p_fail: f64,
}

fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &k in &config.k_grid {
        for &p_fail in &config.p_fail_grid {
            out.push(Cell {
                index: out.len(),
                k,
                p_fail,
            });
        }
    }
    out
}

/// Doubles held by one instance of a cell.
fn instance_doubles(config: &ExperimentConfig, k: usize) -> usize {
    let n = config.p * k;
    match config.ensemble {
        EnsembleKind::Gaussian => n * (config.p + 2),
        EnsembleKind::Hadamard => 3 * n,
    }
}

fn build_instance(config: &ExperimentConfig, cell: Cell, seed: u64) -> Result<Instance> {
    let p = config.p;
    let ensemble = match config.ensemble {
        EnsembleKind::Gaussian => SensingEnsemble::gaussian(p, cell.k * p, seed)?,
        EnsembleKind::Hadamard => SensingEnsemble::hadamard(p, cell.k, seed)?,
    };
    let corruption = CorruptionSpec::new(cell.p_fail, config.corruption, config.gamma)?;
    generate_instance(ensemble, &synthetic_signal(p, seed), corruption, seed)
}

fn run_replicate(config: &ExperimentConfig, cell: Cell, replicate: usize) -> Result<Vec<RunRow>> {
    let seed = derive_seed(config.seed, cell.index as u64, replicate as u64);
    let context = |e: SrprError| SrprError::Format(format!("cell {} replicate {replicate}: {e}", cell.index));
    let instance = build_instance(config, cell, seed).map_err(context)?;
    let delta = match config.delta {
        DeltaPolicy::Fixed(d) => d,
        DeltaPolicy::Heuristic(d0) => {
            delta_heuristic(&instance, d0, robust_norm_estimate(&instance)).map_err(context)?
        }
    };
    let loss = SmoothedLoss::new(config.kernel, delta).map_err(context)?;
    let settings = RunSettings {
        smooth: config.smooth,
        ipl: config.ipl,
        finisher: match config.finisher {
            FinisherPolicy::On => true,
            FinisherPolicy::Off => false,
            FinisherPolicy::Auto => !instance.corruption.is_clean(),
        },
    };
    Ok(config
        .algorithms
        .iter()
        .map(|&alg| {
            let out = run_algorithm(&instance, loss, alg, config.init_spec(alg), &settings, seed);
            RunRow {
                cell: cell.index,
                p: config.p,
                k: cell.k,
                n: instance.n(),
                p_fail: cell.p_fail,
                corruption: config.corruption.to_string(),
                gamma: config.gamma,
                delta,
                algorithm: alg.name().into(),
                replicate,
                seed,
                success: out.rel_error <= config.threshold(alg),
                status: out.status,
                iterations: out.iterations,
                rel_error: out.rel_error,
                wall_nanos: out.wall_nanos,
            }
        })
        .collect())
}

fn summarize(config: &ExperimentConfig, runs: &[RunRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for cell in cells(config) {
        for alg in &config.algorithms {
            let rows: Vec<&RunRow> = runs
                .iter()
                .filter(|r| r.cell == cell.index && r.algorithm == alg.name())
                .collect();
            let successes = rows.iter().filter(|r| r.success).count();
            let errs: Vec<f64> = rows.iter().map(|r| r.rel_error).filter(|e| e.is_finite()).collect();
            let times: Vec<f64> = rows.iter().map(|r| r.wall_nanos as f64).collect();
            out.push(SummaryRow {
                cell: cell.index,
                p: config.p,
                k: cell.k,
                n: config.p * cell.k,
                p_fail: cell.p_fail,
                algorithm: alg.name().into(),
                replicates: rows.len(),
                successes,
                success_rate: successes as f64 / rows.len().max(1) as f64,
                median_rel_error: if errs.is_empty() { f64::NAN } else { numeric::median(&errs) },
                median_wall_nanos: numeric::median(&times),
            });
        }
    }
    out
}

/// Runs every (cell, replicate, algorithm) combination. Replicates run on a
/// worker pool whose size also respects the `max_doubles` budget; rows come
/// back in canonical order regardless of scheduling. Seeds derive from the
/// master seed, the cell index and the replicate index only.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResults> {
    config.validate()?;
    let cells = cells(config);
    let largest = cells
        .iter()
        .map(|c| instance_doubles(config, c.k))
        .max()
        .unwrap_or(1);
    if largest > config.max_doubles {
        return Err(SrprError::param(
            "max_doubles",
            format!("one instance needs {largest} doubles, budget is {}", config.max_doubles),
        ));
    }
    let budget_workers = (config.max_doubles / largest).max(1);
    let workers = config
        .threads
        .unwrap_or_else(rayon::current_num_threads)
        .min(budget_workers);
    let tasks: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&c| (0..config.replicates).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SrprError::Format(format!("cannot start worker pool: {e}")))?;
    let per_task: Vec<Result<Vec<RunRow>>> =
        pool.install(|| tasks.par_iter().map(|&(c, r)| run_replicate(config, c, r)).collect());
    let mut runs = Vec::new();
    for rows in per_task {
        runs.extend(rows?);
    }
    let summary = summarize(config, &runs);
    let results = SweepResults { runs, summary };
    if let Some(path) = &config.runs_csv {
        save_rows(path, &results.runs)?;
    }
    if let Some(path) = &config.summary_csv {
        save_rows(path, &results.summary)?;
    }
    Ok(results)
}

/// A sweep under bounded noise: every method succeeds at relative error
/// `0.05`, and the finisher stops at a step norm matched to that accuracy.
/// With `gamma = 0` this is exactly [`run_sweep`].
pub fn bounded_noise_sweep(config: &ExperimentConfig) -> Result<SweepResults> {
    if config.gamma == 0.0 {
        return run_sweep(config);
    }
    let mut cfg = config.clone();
    for &alg in &config.algorithms {
        cfg.thresholds.insert(alg, 0.05);
    }
    cfg.ipl.stop_tol = Some(cfg.ipl.stop_tol.unwrap_or(0.0).max(5e-5));
    run_sweep(&cfg)
}

