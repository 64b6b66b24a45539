use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrprError};
use crate::initialization::{InitSpec, RadiusLaw};
use crate::measurement::CorruptionKind;
use crate::smoothed_loss::KernelKind;
use crate::solvers::{IplConfig, SolveConfig};

/// A recovery method: initialization plus solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Smoothed objective from a random start, then the proximal-linear finisher.
    SrprRi,
    /// Smoothed objective from the spectral start, then the finisher.
    SrprSi,
    /// Inexact proximal-linear method on `F` from a random start.
    IplRi,
    IplSi,
    /// Proximal-linear method with tightly solved subproblems.
    PlRi,
    PlSi,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::SrprRi,
        Algorithm::SrprSi,
        Algorithm::IplRi,
        Algorithm::IplSi,
        Algorithm::PlRi,
        Algorithm::PlSi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SrprRi => "srpr-ri",
            Algorithm::SrprSi => "srpr-si",
            Algorithm::IplRi => "ipl-ri",
            Algorithm::IplSi => "ipl-si",
            Algorithm::PlRi => "pl-ri",
            Algorithm::PlSi => "pl-si",
        }
    }

    pub fn spectral(self) -> bool {
        matches!(self, Algorithm::SrprSi | Algorithm::IplSi | Algorithm::PlSi)
    }

    pub fn is_pl(self) -> bool {
        matches!(self, Algorithm::PlRi | Algorithm::PlSi)
    }

    /// Success threshold on the relative error for simulated data.
    pub fn default_threshold(self) -> f64 {
        if self.is_pl() {
            1e-4
        } else {
            1e-6
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SrprError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| SrprError::param("algorithm", format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    #[default]
    Gaussian,
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaPolicy {
    Fixed(f64),
    /// `δ = δ₀ ‖(1/n)AᵀA‖ r̂²` with `r̂` the robust norm estimate.
    Heuristic(f64),
}

/// Whether the smoothed phase is followed by the proximal-linear finisher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinisherPolicy {
    /// Only on corrupted or noisy cells.
    #[default]
    Auto,
    On,
    Off,
}

fn default_replicates() -> usize {
    1
}

fn default_radius() -> RadiusLaw {
    RadiusLaw::UniformScaled { max: 4.0 }
}

fn default_quantile() -> f64 {
    0.5
}

fn default_max_doubles() -> usize {
    200_000_000
}

fn default_smooth() -> SolveConfig {
    SolveConfig {
        record_trace: false,
        ..SolveConfig::default()
    }
}

fn default_ipl() -> IplConfig {
    IplConfig {
        record_trace: false,
        ..IplConfig::default()
    }
}

/// A simulated sweep over oversampling ratios and corruption levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub p: usize,
    /// Oversampling ratios `k = n/p`.
    pub k_grid: Vec<usize>,
    pub p_fail_grid: Vec<f64>,
    pub corruption: CorruptionKind,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub ensemble: EnsembleKind,
    pub kernel: KernelKind,
    pub delta: DeltaPolicy,
    #[serde(default = "default_radius")]
    pub random_radius: RadiusLaw,
    #[serde(default = "default_quantile")]
    pub spectral_quantile: f64,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Per-algorithm overrides of [`Algorithm::default_threshold`].
    #[serde(default)]
    pub thresholds: BTreeMap<Algorithm, f64>,
    #[serde(default)]
    pub finisher: FinisherPolicy,
    #[serde(default = "default_smooth")]
    pub smooth: SolveConfig,
    #[serde(default = "default_ipl")]
    pub ipl: IplConfig,
    /// Bound on doubles held by instances in flight; limits the worker count.
    #[serde(default = "default_max_doubles")]
    pub max_doubles: usize,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub runs_csv: Option<PathBuf>,
    #[serde(default)]
    pub summary_csv: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with library defaults for everything but the grid.
    pub fn new(p: usize, k_grid: Vec<usize>, p_fail_grid: Vec<f64>, algorithms: Vec<Algorithm>) -> Self {
        ExperimentConfig {
            p,
            k_grid,
            p_fail_grid,
            corruption: CorruptionKind::HalfCauchy,
            gamma: 0.0,
            ensemble: EnsembleKind::Gaussian,
            kernel: KernelKind::PseudoHuber,
            delta: DeltaPolicy::Fixed(0.25),
            random_radius: default_radius(),
            spectral_quantile: default_quantile(),
            algorithms,
            replicates: 1,
            seed: 0,
            thresholds: BTreeMap::new(),
            finisher: FinisherPolicy::Auto,
            smooth: default_smooth(),
            ipl: default_ipl(),
            max_doubles: default_max_doubles(),
            threads: None,
            runs_csv: None,
            summary_csv: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_reader(std::fs::File::open(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(SrprError::param("p", "need p ≥ 2"));
        }
        if self.ensemble == EnsembleKind::Hadamard && !self.p.is_power_of_two() {
            return Err(SrprError::NotPowerOfTwo(self.p));
        }
        if self.k_grid.is_empty() || self.k_grid.contains(&0) {
            return Err(SrprError::param("k_grid", "need at least one positive ratio"));
        }
        if self.p_fail_grid.is_empty() || self.p_fail_grid.iter().any(|f| !(0.0..1.0).contains(f)) {
            return Err(SrprError::param("p_fail_grid", "values must lie in [0, 1)"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(SrprError::param("gamma", "must be nonnegative"));
        }
        match self.delta {
            DeltaPolicy::Fixed(d) | DeltaPolicy::Heuristic(d) if !(d > 0.0 && d.is_finite()) => {
                return Err(SrprError::param("delta", format!("must be positive, got {d}")));
            }
            _ => {}
        }
        if self.algorithms.is_empty() {
            return Err(SrprError::param("algorithms", "need at least one"));
        }
        if self.replicates == 0 {
            return Err(SrprError::param("replicates", "need at least one"));
        }
        if self.thresholds.values().any(|t| !(*t > 0.0)) {
            return Err(SrprError::param("thresholds", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(SrprError::param("threads", "must be at least 1"));
        }
        self.init_spec(Algorithm::SrprRi).validate()?;
        self.init_spec(Algorithm::SrprSi).validate()?;
        self.ipl.validate()
    }

    pub fn threshold(&self, algorithm: Algorithm) -> f64 {
        self.thresholds
            .get(&algorithm)
            .copied()
            .unwrap_or_else(|| algorithm.default_threshold())
    }

    pub fn init_spec(&self, algorithm: Algorithm) -> InitSpec {
        if algorithm.spectral() {
            InitSpec::Spectral {
                quantile: self.spectral_quantile,
                power_iters: 500,
            }
        } else {
            InitSpec::Random {
                radius: self.random_radius,
            }
        }
    }
}
