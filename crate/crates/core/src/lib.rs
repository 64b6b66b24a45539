//! Smoothed robust phase retrieval.
//!
//! Recovers `x⋆ ∈ ℝᵖ` (up to sign) from measurements `bᵢ ≈ (aᵢᵀx⋆)²`, a
//! fraction of which may be arbitrarily corrupted, by minimizing the
//! kernel-smoothed ℓ1 objective
//!
//! ```text
//! F_δ(x) = (1/n) Σ l_δ((aᵢᵀx)² − bᵢ)
//! ```
//!
//! and optionally polishing on the unsmoothed objective with an inexact
//! proximal-linear method. The crate also ships tools that probe the
//! population and empirical landscape of `F_δ`, and an experiment harness.

pub mod error;
pub mod harness;
pub mod initialization;
pub mod landscape;
pub mod measurement;
pub mod numeric;
pub mod objective;
pub mod rng;
pub mod smoothed_loss;
pub mod solvers;

pub use error::{Result, SrprError};
pub use initialization::{random_init, spectral_init, InitSpec, RadiusLaw, SpectralInit};
pub use measurement::{
    generate_instance, synthetic_signal, CorruptionKind, CorruptionSpec, Instance,
    SensingEnsemble,
};
pub use objective::{relative_error, LandscapeStats, Objective};
pub use smoothed_loss::{KernelKind, SmoothedLoss};
pub use solvers::{SolveResult, SolveStatus, TraceRow};
