//! Experiment orchestration: simulated sweeps, bounded-noise sweeps and image
//! recovery, with CSV and PPM output.

mod config;
mod image;
mod sweep;

pub use config::{Algorithm, DeltaPolicy, EnsembleKind, ExperimentConfig, FinisherPolicy};
pub use image::{image_threshold, run_image, synthetic_image, Image, ImageReport, ImageRun, ImageTask, MAX_IMAGE_LEN};
pub use sweep::{
    bounded_noise_sweep, delta_heuristic, run_algorithm, run_sweep, Outcome, RunRow,
    RunSettings, SummaryRow, SweepResults,
};
