use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::SensingEnsemble;
use crate::error::{check_len, Result, SrprError};
use crate::numeric;
use crate::rng::{stream_rng, Stream};

/// Law of the corrupted measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    /// Corrupted entries are set to zero.
    #[serde(alias = "zero")]
    Zeroing,
    /// `b = tan(πU/2) · median{(aᵢᵀx⋆)²}` with `U ~ U(0, 1)`.
    #[serde(alias = "cauchy")]
    HalfCauchy,
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorruptionKind::Zeroing => "zeroing",
            CorruptionKind::HalfCauchy => "half-cauchy",
        })
    }
}

impl FromStr for CorruptionKind {
    type Err = SrprError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "zeroing" => Ok(CorruptionKind::Zeroing),
            "cauchy" | "half-cauchy" => Ok(CorruptionKind::HalfCauchy),
            _ => Err(SrprError::param("corruption", format!("unknown kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub p_fail: f64,
    pub kind: CorruptionKind,
    /// Inlier noise `τᵢ ~ U(−γ, γ)`; zero disables it.
    #[serde(default)]
    pub gamma: f64,
}

impl CorruptionSpec {
    pub fn none() -> Self {
        CorruptionSpec {
            p_fail: 0.0,
            kind: CorruptionKind::Zeroing,
            gamma: 0.0,
        }
    }

    pub fn new(p_fail: f64, kind: CorruptionKind, gamma: f64) -> Result<Self> {
        let spec = CorruptionSpec { p_fail, kind, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p_fail) {
            return Err(SrprError::param(
                "p_fail",
                format!("must lie in [0, 1), got {}", self.p_fail),
            ));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(SrprError::param(
                "gamma",
                format!("must be finite and nonnegative, got {}", self.gamma),
            ));
        }
        Ok(())
    }

    /// Number of corrupted measurements out of `n`.
    pub fn outlier_count(&self, n: usize) -> usize {
        ((self.p_fail * n as f64).round() as usize).min(n)
    }

    pub fn is_clean(&self) -> bool {
        self.p_fail == 0.0 && self.gamma == 0.0
    }
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec::none()
    }
}

/// A phase retrieval problem: sensing matrix, measurements and, for
/// synthetic data, the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub ensemble: SensingEnsemble,
    pub b: Vec<f64>,
    pub x_star: Option<Vec<f64>>,
    /// `true` for uncorrupted measurements. Evaluation only.
    pub inlier_mask: Option<Vec<bool>>,
    pub corruption: CorruptionSpec,
    pub seed: u64,
}

impl Instance {
    /// Instance from observed data only.
    pub fn from_measurements(ensemble: SensingEnsemble, b: Vec<f64>) -> Result<Self> {
        check_len(ensemble.n(), b.len())?;
        Ok(Instance {
            ensemble,
            b,
            x_star: None,
            inlier_mask: None,
            corruption: CorruptionSpec::none(),
            seed: 0,
        })
    }

    pub fn p(&self) -> usize {
        self.ensemble.p()
    }

    pub fn n(&self) -> usize {
        self.ensemble.n()
    }

    pub fn x_star(&self) -> Result<&[f64]> {
        self.x_star.as_deref().ok_or(SrprError::MissingGroundTruth)
    }

    pub fn validate(&self) -> Result<()> {
        check_len(self.n(), self.b.len())?;
        if let Some(x) = &self.x_star {
            check_len(self.p(), x.len())?;
        }
        if let Some(m) = &self.inlier_mask {
            check_len(self.n(), m.len())?;
        }
        self.corruption.validate()
    }
}

/// Signal with independent entries uniform on `{−1/√p, 1/√p}`, so `‖x⋆‖ = 1`.
pub fn synthetic_signal(p: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Signal);
    let s = 1.0 / (p as f64).sqrt();
    (0..p)
        .map(|_| if rng.random::<bool>() { s } else { -s })
        .collect()
}

/// Measurements `bᵢ = (aᵢᵀx⋆)² + τᵢ` on inliers and corrupted values on a
/// uniformly chosen set of `round(p_fail·n)` outliers.
pub fn generate_instance(
    ensemble: SensingEnsemble,
    x_star: &[f64],
    corruption: CorruptionSpec,
    seed: u64,
) -> Result<Instance> {
    check_len(ensemble.p(), x_star.len())?;
    corruption.validate()?;
    if numeric::norm(x_star) == 0.0 {
        return Err(SrprError::ZeroGroundTruth);
    }
    let n = ensemble.n();
    let clean: Vec<f64> = ensemble.forward(x_star).iter().map(|v| v * v).collect();
    let mut rng = stream_rng(seed, Stream::Corruption);

    let n2 = corruption.outlier_count(n);
    let mut outliers = index::sample(&mut rng, n, n2).into_vec();
    outliers.sort_unstable();
    let mut mask = vec![true; n];
    for &i in &outliers {
        mask[i] = false;
    }

    let mut b = clean.clone();
    if n2 > 0 {
        match corruption.kind {
            CorruptionKind::Zeroing => outliers.iter().for_each(|&i| b[i] = 0.0),
            CorruptionKind::HalfCauchy => {
                let med = numeric::median(&clean);
                for &i in &outliers {
                    let u = loop {
                        let u: f64 = rng.random();
                        if u > 0.0 {
                            break u;
                        }
                    };
                    b[i] = (FRAC_PI_2 * u).tan() * med;
                }
            }
        }
    }
    if corruption.gamma > 0.0 {
        let g = corruption.gamma;
        for (bi, _) in b.iter_mut().zip(&mask).filter(|(_, &m)| m) {
            *bi += rng.random_range(-g..g);
        }
    }

    Ok(Instance {
        ensemble,
        b,
        x_star: Some(x_star.to_vec()),
        inlier_mask: Some(mask),
        corruption,
        seed,
    })
}
