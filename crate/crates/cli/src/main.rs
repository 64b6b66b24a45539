use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use srpr::harness::{
    bounded_noise_sweep, run_image, run_sweep, synthetic_image, Algorithm, ExperimentConfig, Image,
    ImageTask,
};
use srpr::initialization::{initial_point, InitSpec};
use srpr::landscape::{
    empirical_scan, ring_scan, Axis, GridSpec, PopulationPoint, PopulationProbe, Quadrature,
};
use srpr::measurement::io::{load_instance, save_instance};
use srpr::solvers::{
    estimate_step, gd_fixed, ipl, mapg, srpr_pipeline, IplConfig, PipelineConfig, SolveConfig,
    StepPolicy,
};
use srpr::{
    generate_instance, synthetic_signal, CorruptionKind, CorruptionSpec, KernelKind, Objective,
    SensingEnsemble, SmoothedLoss, SolveResult,
};

#[derive(Parser)]
#[command(name = "srpr", version, about = "Smoothed robust phase retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Generate(GenerateArgs),
    /// Recover a signal from a saved instance.
    Solve(SolveArgs),
    /// Run a simulated sweep described by a JSON config.
    Sweep(SweepArgs),
    /// Recover an image from simulated Hadamard measurements.
    Image(ImageArgs),
    /// Write the synthetic test image.
    SynthImage(SynthImageArgs),
    /// Population or empirical landscape tables.
    #[command(subcommand)]
    Landscape(LandscapeCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Gaussian,
    Hadamard,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    p: usize,
    /// Oversampling ratio n/p.
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    ensemble: EnsembleArg,
    #[arg(long, default_value_t = 0.0)]
    pfail: f64,
    #[arg(long, default_value = "cauchy")]
    corruption: CorruptionKind,
    /// Half-width of uniform noise on inliers.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum AlgoArg {
    Gd,
    Mapg,
    Ipl,
    Pipeline,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum InitArg {
    Random,
    Spectral,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "pipeline")]
    algo: AlgoArg,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value = "pseudo-huber")]
    kernel: KernelKind,
    #[arg(long, value_enum, default_value = "random")]
    init: InitArg,
    #[arg(long, default_value_t = 0.5)]
    init_quantile: f64,
    #[arg(long, value_enum, default_value = "off")]
    finisher: Switch,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Fixed gradient step; estimated from curvature probes when omitted.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the recovered signal, one value per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Treat the sweep as a bounded-noise experiment (success at 0.05).
    #[arg(long)]
    bounded_noise: bool,
    #[arg(long)]
    runs: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ImageArgs {
    /// PPM (P6) input; the synthetic test image when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    pfail: f64,
    #[arg(long, default_value = "zero")]
    corruption: CorruptionKind,
    #[arg(long, default_value_t = 0.01)]
    delta0: f64,
    #[arg(long, value_delimiter = ',', default_value = "srpr-si,srpr-ri")]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "image-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthImageArgs {
    #[arg(long, default_value_t = 73)]
    width: usize,
    #[arg(long, default_value_t = 73)]
    height: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = -1.5)]
    u_min: f64,
    #[arg(long, default_value_t = 1.5)]
    u_max: f64,
    #[arg(long, default_value_t = 31)]
    u_count: usize,
    #[arg(long, default_value_t = -1.5)]
    v_min: f64,
    #[arg(long, default_value_t = 1.5)]
    v_max: f64,
    #[arg(long, default_value_t = 31)]
    v_count: usize,
}

impl GridArgs {
    fn axes(&self) -> (Axis, Axis) {
        (
            Axis::new(self.u_min, self.u_max, self.u_count),
            Axis::new(self.v_min, self.v_max, self.v_count),
        )
    }
}

#[derive(Subcommand)]
enum LandscapeCommand {
    /// Population statistics on the (xᵀx⋆, orthogonal) plane.
    Population {
        #[arg(long, default_value = "gaussian")]
        kernel: KernelKind,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical statistics of a saved instance with known truth.
    Empirical {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "pseudo-huber")]
        kernel: KernelKind,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stationary-ring radius and curvature for a list of bandwidths.
    UDelta {
        #[arg(long, default_value = "gaussian")]
        kernel: KernelKind,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.1,0.05,0.01")]
        deltas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Image(a) => image(a),
        Command::SynthImage(a) => {
            synthetic_image(a.width, a.height)?.save_ppm(&a.out)?;
            log::info!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Landscape(c) => landscape(c),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let ensemble = match a.ensemble {
        EnsembleArg::Gaussian => SensingEnsemble::gaussian(a.p, a.k * a.p, a.seed)?,
        EnsembleArg::Hadamard => SensingEnsemble::hadamard(a.p, a.k, a.seed)?,
    };
    let corruption = CorruptionSpec::new(a.pfail, a.corruption, a.gamma)?;
    let inst = generate_instance(ensemble, &synthetic_signal(a.p, a.seed), corruption, a.seed)?;
    save_instance(&a.out, &inst).with_context(|| format!("writing {}", a.out.display()))?;
    log::info!("wrote p = {}, n = {} to {}", inst.p(), inst.n(), a.out.display());
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let inst = load_instance(&a.instance).with_context(|| format!("reading {}", a.instance.display()))?;
    let loss = SmoothedLoss::new(a.kernel, a.delta)?;
    let obj = Objective::new(&inst, loss);
    let init = match a.init {
        InitArg::Random => InitSpec::random(),
        InitArg::Spectral => InitSpec::Spectral {
            quantile: a.init_quantile,
            power_iters: 500,
        },
    };
    let smooth = SolveConfig {
        max_iters: a.max_iters,
        seed: a.seed,
        step: match a.step {
            Some(t) => StepPolicy::LineSearch {
                init_step: Some(t),
                shrink: 0.5,
                sufficient_decrease: 1e-4,
            },
            None => StepPolicy::line_search(),
        },
        ..SolveConfig::default()
    };
    let result: SolveResult = match a.algo {
        AlgoArg::Pipeline => srpr_pipeline(
            &inst,
            loss,
            init,
            a.finisher == Switch::On,
            &PipelineConfig {
                smooth,
                finisher: IplConfig::default(),
                init_seed: a.seed,
            },
        )?,
        AlgoArg::Mapg => mapg(&obj, &initial_point(&inst, init, a.seed)?, &smooth)?,
        AlgoArg::Gd => {
            let t = match a.step {
                Some(t) => t,
                None => estimate_step(&obj, 4, a.seed)?,
            };
            let cfg = SolveConfig {
                step: StepPolicy::Fixed(t),
                ..smooth
            };
            gd_fixed(&obj, &initial_point(&inst, init, a.seed)?, &cfg)?
        }
        AlgoArg::Ipl => ipl(&inst, &initial_point(&inst, init, a.seed)?, &IplConfig::default())?,
    };
    match result.rel_error {
        Some(e) => println!(
            "status {} after {} iterations, objective {:.6e}, relative error {:.3e}",
            result.status, result.iterations, result.objective, e
        ),
        None => println!(
            "status {} after {} iterations, objective {:.6e}",
            result.status, result.iterations, result.objective
        ),
    }
    if let Some(path) = &a.trace {
        let mut w = csv::Writer::from_path(path)?;
        for row in &result.trace {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.out {
        let text: String = result.x.iter().map(|v| format!("{v:.17e}\n")).collect();
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    if a.runs.is_some() {
        cfg.runs_csv = a.runs;
    }
    if a.summary.is_some() {
        cfg.summary_csv = a.summary;
    }
    let res = if a.bounded_noise {
        bounded_noise_sweep(&cfg)?
    } else {
        run_sweep(&cfg)?
    };
    if cfg.summary_csv.is_none() {
        res.write_summary_csv(std::io::stdout())?;
    }
    Ok(())
}

fn image(a: ImageArgs) -> Result<()> {
    let img = match &a.input {
        Some(path) => Image::load_ppm(path).with_context(|| format!("reading {}", path.display()))?,
        None => synthetic_image(73, 73)?,
    };
    let mut task = ImageTask::new(img, a.k, CorruptionSpec::new(a.pfail, a.corruption, 0.0)?);
    task.delta0 = a.delta0;
    let report = run_image(&task, &a.algorithms, a.seed)?;
    println!(
        "p = {}, n = {}, delta = {:.3e}, c0 = {:.3}",
        report.p, report.n, report.delta, report.c0
    );
    for r in &report.runs {
        println!(
            "{:8} {:9} rel_error {:.3e} success {} exact pixels {}",
            r.algorithm, r.status, r.rel_error, r.success, r.exact_pixels
        );
    }
    for path in report.save(&a.out_dir)? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn landscape(c: LandscapeCommand) -> Result<()> {
    match c {
        LandscapeCommand::Population {
            kernel,
            delta,
            grid,
            out,
        } => {
            let probe = PopulationProbe::new(SmoothedLoss::new(kernel, delta)?)
                .with_quadrature(Quadrature::Adaptive { tol: 1e-9 });
            let (ua, va) = grid.axes();
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(["u", "v", "f_delta", "grad_norm", "u1", "u2", "u3"])?;
            for u in ua.points() {
                for v in va.points() {
                    // population quantities depend on |v| only
                    let PopulationPoint {
                        f_delta,
                        grad_norm,
                        u1,
                        u2,
                        u3,
                        ..
                    } = probe.point(u, v.abs())?;
                    w.serialize((u, v, f_delta, grad_norm, u1, u2, u3))?;
                }
            }
            w.flush()?;
            log::info!("wrote {}", out.display());
        }
        LandscapeCommand::Empirical {
            instance,
            kernel,
            delta,
            grid,
            seed,
            out,
        } => {
            let inst = load_instance(&instance)?;
            if inst.x_star.is_none() {
                bail!("{} has no ground truth", instance.display());
            }
            let (u, v) = grid.axes();
            let g = empirical_scan(&inst, SmoothedLoss::new(kernel, delta)?, &GridSpec { u, v, seed })?;
            g.save_csv(&out)?;
            log::info!("wrote {}", out.display());
        }
        LandscapeCommand::UDelta { kernel, deltas, out } => {
            let probe = PopulationProbe::new(SmoothedLoss::new(kernel, deltas.first().copied().unwrap_or(0.1))?);
            let rows = ring_scan(&probe, &deltas)?;
            write_or_print(out.as_deref(), &rows)?;
        }
    }
    Ok(())
}

fn write_or_print<T: serde::Serialize>(path: Option<&Path>, rows: &[T]) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = csv::Writer::from_path(p)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
