//! Convolution-smoothed absolute losses.
//!
//! For a kernel `K` and bandwidth `δ > 0` the smoothed loss is
//! `l_δ = |·| * K_δ` with `K_δ(x) = K(x/δ)/δ`. Every kernel here has a closed
//! form `l_δ(r) = δ·l¹(r/δ)`, and the derivatives follow from
//! `l′_δ(r) = 2K̃(r/δ) − 1` and `l″_δ(r) = 2K(r/δ)/δ` where `K̃` is the
//! kernel's distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrprError};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    Logistic,
    Epanechnikov,
    Triangular,
    /// `K(x) = 1 / (2 (x² + 1)^{3/2})`, which smooths `|x|` into the
    /// pseudo-Huber loss `√(x² + δ²)`.
    PseudoHuber,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::Gaussian,
        KernelKind::Logistic,
        KernelKind::Epanechnikov,
        KernelKind::Triangular,
        KernelKind::PseudoHuber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Logistic => "logistic",
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Triangular => "triangular",
            KernelKind::PseudoHuber => "pseudo-huber",
        }
    }

    /// Kernels supported on `[-1, 1]`.
    pub fn is_compact(self) -> bool {
        matches!(self, KernelKind::Epanechnikov | KernelKind::Triangular)
    }

    /// Kernel density `K(x)`.
    pub fn density(self, x: f64) -> f64 {
        match self {
            KernelKind::Gaussian => FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
            KernelKind::Logistic => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            KernelKind::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
            KernelKind::Triangular => (1.0 - x.abs()).max(0.0),
            KernelKind::PseudoHuber => {
                let h = x.hypot(1.0);
                0.5 / (h * h * h)
            }
        }
    }

    /// Integrated kernel `K̃(x) = ∫_{-∞}^x K`.
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            KernelKind::Gaussian => 0.5 * libm::erfc(-x * FRAC_1_SQRT_2),
            KernelKind::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            KernelKind::Epanechnikov => {
                if x <= -1.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    0.5 + 0.75 * x - 0.25 * x * x * x
                }
            }
            KernelKind::Triangular => {
                if x <= -1.0 {
                    0.0
                } else if x <= 0.0 {
                    0.5 * (1.0 + x) * (1.0 + x)
                } else if x < 1.0 {
                    1.0 - 0.5 * (1.0 - x) * (1.0 - x)
                } else {
                    1.0
                }
            }
            KernelKind::PseudoHuber => 0.5 + 0.5 * x / x.hypot(1.0),
        }
    }

    /// Unit-bandwidth loss `l¹(x)`.
    pub fn unit_loss(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            KernelKind::Gaussian => {
                SQRT_2_OVER_PI * (-0.5 * x * x).exp() + x * libm::erf(x * FRAC_1_SQRT_2)
            }
            // x + 2 log(1 + e^{-x}) for x ≥ 0, extended by evenness
            KernelKind::Logistic => a + 2.0 * (-a).exp().ln_1p(),
            KernelKind::Epanechnikov => {
                if a <= 1.0 {
                    0.75 * a * a - 0.125 * a.powi(4) + 0.375
                } else {
                    a
                }
            }
            KernelKind::Triangular => {
                if a <= 1.0 {
                    a * a - a * a * a / 3.0 + 1.0 / 3.0
                } else {
                    a
                }
            }
            KernelKind::PseudoHuber => x.hypot(1.0),
        }
    }

    /// `l¹(x) − l¹(0)`, evaluated without cancellation near zero.
    pub fn unit_excess(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            KernelKind::Gaussian => {
                SQRT_2_OVER_PI * (-0.5 * x * x).exp_m1() + x * libm::erf(x * FRAC_1_SQRT_2)
            }
            KernelKind::Logistic => {
                if a < 2.0 {
                    // 2 log cosh(x/2) = 2 log1p(2 sinh²(x/4))
                    let s = (0.25 * a).sinh();
                    2.0 * (2.0 * s * s).ln_1p()
                } else {
                    a + 2.0 * (-a).exp().ln_1p() - 2.0 * LN_2
                }
            }
            KernelKind::Epanechnikov => {
                if a <= 1.0 {
                    0.75 * a * a - 0.125 * a.powi(4)
                } else {
                    a - 0.375
                }
            }
            KernelKind::Triangular => {
                if a <= 1.0 {
                    a * a - a * a * a / 3.0
                } else {
                    a - 1.0 / 3.0
                }
            }
            KernelKind::PseudoHuber => a * a / (x.hypot(1.0) + 1.0),
        }
    }

    /// `2K̃(x) − 1`, the unit-bandwidth first derivative.
    pub fn unit_deriv(self, x: f64) -> f64 {
        match self {
            KernelKind::Gaussian => libm::erf(x * FRAC_1_SQRT_2),
            KernelKind::Logistic => (0.5 * x).tanh(),
            KernelKind::Epanechnikov => {
                if x.abs() <= 1.0 {
                    1.5 * x - 0.5 * x * x * x
                } else {
                    x.signum()
                }
            }
            KernelKind::Triangular => {
                if x.abs() <= 1.0 {
                    2.0 * x - x * x.abs()
                } else {
                    x.signum()
                }
            }
            KernelKind::PseudoHuber => x / x.hypot(1.0),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = SrprError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelKind::Gaussian),
            "logistic" => Ok(KernelKind::Logistic),
            "epanechnikov" => Ok(KernelKind::Epanechnikov),
            "triangular" => Ok(KernelKind::Triangular),
            "pseudo-huber" | "pseudohuber" => Ok(KernelKind::PseudoHuber),
            _ => Err(SrprError::UnknownKernel(s.to_string())),
        }
    }
}

/// A kernel together with a validated bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedLoss {
    kernel: KernelKind,
    delta: f64,
}

impl SmoothedLoss {
    pub fn new(kernel: KernelKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(SrprError::InvalidBandwidth(delta));
        }
        Ok(SmoothedLoss { kernel, delta })
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `l_δ(r)`
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.delta * self.kernel.unit_loss(r / self.delta)
    }

    /// `l_δ(r) − l_δ(0)`
    #[inline]
    pub fn excess(&self, r: f64) -> f64 {
        self.delta * self.kernel.unit_excess(r / self.delta)
    }

    /// `l′_δ(r)`
    #[inline]
    pub fn deriv(&self, r: f64) -> f64 {
        self.kernel.unit_deriv(r / self.delta)
    }

    /// `l″_δ(r)`
    #[inline]
    pub fn second_deriv(&self, r: f64) -> f64 {
        2.0 / self.delta * self.kernel.density(r / self.delta)
    }
}

/// Exact `sup_x |l¹(x) − |x||` is attained at the origin for every kernel here;
/// this is the closed-form reference the grid search in the tests must reproduce.
pub fn unit_gap_at_zero(kernel: KernelKind) -> f64 {
    match kernel {
        KernelKind::Gaussian => (2.0 / PI).sqrt(),
        KernelKind::Logistic => 2.0 * LN_2,
        KernelKind::Epanechnikov => 0.375,
        KernelKind::Triangular => 1.0 / 3.0,
        KernelKind::PseudoHuber => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kernel_values() {
        assert!(close(KernelKind::Gaussian.density(0.0), 0.398942, 1e-6));
        assert_eq!(KernelKind::Epanechnikov.density(2.0), 0.0);
        assert_eq!(KernelKind::Logistic.density(0.0), 0.25);
    }

    #[test]
    fn cdf_values() {
        for k in KernelKind::ALL {
            assert!(close(k.cdf(0.0), 0.5, 1e-15), "{k}");
        }
        assert!(close(KernelKind::PseudoHuber.cdf(1.0), 0.853553, 1e-6));
        assert_eq!(KernelKind::Triangular.cdf(1.0), 1.0);
    }

    #[test]
    fn loss_values() {
        let ph = SmoothedLoss::new(KernelKind::PseudoHuber, 1.0).unwrap();
        assert_eq!(ph.value(0.0), 1.0);
        let lg = SmoothedLoss::new(KernelKind::Logistic, 1.0).unwrap();
        assert!(close(lg.value(0.0), 1.386294, 1e-6));
        let ep = SmoothedLoss::new(KernelKind::Epanechnikov, 1.0).unwrap();
        assert!(close(ep.value(1.0), 1.0, 1e-15));
        let ph3 = SmoothedLoss::new(KernelKind::PseudoHuber, 3.0).unwrap();
        assert!(close(ph3.value(4.0), 5.0, 1e-14));
    }

    #[test]
    fn deriv_values() {
        for k in KernelKind::ALL {
            let l = SmoothedLoss::new(k, 0.7).unwrap();
            assert_eq!(l.deriv(0.0), 0.0);
        }
        let ph = SmoothedLoss::new(KernelKind::PseudoHuber, 1.0).unwrap();
        assert!(close(ph.deriv(10.0), 0.995037, 1e-6));
        let tr = SmoothedLoss::new(KernelKind::Triangular, 1.0).unwrap();
        assert_eq!(tr.deriv(1.0), 1.0);
        assert_eq!(tr.deriv(3.5), 1.0);
    }

    #[test]
    fn second_deriv_values() {
        let g = SmoothedLoss::new(KernelKind::Gaussian, 1.0).unwrap();
        assert!(close(g.second_deriv(0.0), 0.797885, 1e-6));
        let e = SmoothedLoss::new(KernelKind::Epanechnikov, 0.5).unwrap();
        assert_eq!(e.second_deriv(1.0), 0.0);
        let ph = SmoothedLoss::new(KernelKind::PseudoHuber, 2.0).unwrap();
        assert!(close(ph.second_deriv(0.0), 0.5, 1e-15));
    }

    #[test]
    fn rejects_bad_bandwidth() {
        for d in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(SmoothedLoss::new(KernelKind::Gaussian, d).is_err());
        }
    }

    #[test]
    fn names_round_trip() {
        for k in KernelKind::ALL {
            assert_eq!(k.name().parse::<KernelKind>().unwrap(), k);
        }
        assert!("cauchy".parse::<KernelKind>().is_err());
    }

    #[test]
    fn compact_boundary_convention() {
        // interior limit of K at the support edge is zero for both compact kernels
        for k in [KernelKind::Epanechnikov, KernelKind::Triangular] {
            let l = SmoothedLoss::new(k, 0.5).unwrap();
            assert_eq!(l.second_deriv(0.5), 0.0);
            assert_eq!(l.second_deriv(-0.5), 0.0);
            assert_eq!(l.deriv(0.5), 1.0);
            assert_eq!(l.value(0.5), 0.5);
        }
    }

    #[test]
    fn logistic_stable_far_out() {
        let l = SmoothedLoss::new(KernelKind::Logistic, 1e-3).unwrap();
        let v = l.value(5.0);
        assert!(v.is_finite() && close(v, 5.0, 1e-12));
        assert!(l.second_deriv(5.0) == 0.0);
        assert_eq!(l.deriv(-5.0), -1.0);
    }

    /// Integral of `K` and symmetry, by composite Simpson on a wide window.
    #[test]
    fn kernels_integrate_to_one() {
        for k in KernelKind::ALL {
            let (a, b) = (-2000.0, 2000.0);
            let m = 800_000;
            let h = (b - a) / m as f64;
            let mut s = k.density(a) + k.density(b);
            for i in 1..m {
                let x = a + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * k.density(x);
            }
            let total = s * h / 3.0;
            // pseudo-Huber tail beyond |x| = 2000 is ~ 1/(2·2000²)
            assert!(close(total, 1.0, 2e-6), "{k}: {total}");
            for x in [0.1, 0.5, 0.99, 3.0] {
                assert_eq!(k.density(x), k.density(-x));
                assert!(k.density(x) >= 0.0);
            }
            assert!(k.density(0.0) > 0.0);
        }
    }

    #[test]
    fn cdf_matches_quadrature_of_density() {
        for k in KernelKind::ALL {
            for &x in &[-2.5, -1.0, -0.3, 0.4, 1.0, 2.0] {
                // ∫_0^x K by Simpson, then add K̃(0) = 1/2
                let m = 20_000;
                let h = x / m as f64;
                let mut s = k.density(0.0) + k.density(x);
                for i in 1..m {
                    let t = i as f64 * h;
                    s += if i % 2 == 1 { 4.0 } else { 2.0 } * k.density(t);
                }
                let quad = 0.5 + s * h / 3.0;
                assert!(close(k.cdf(x), quad, 1e-9), "{k} at {x}: {} vs {quad}", k.cdf(x));
            }
        }
    }

    #[test]
    fn excess_matches_difference_of_values() {
        for k in KernelKind::ALL {
            for &x in &[-30.0, -2.5, -1.0, -0.5, 0.0, 0.3, 1.0, 1.7, 2.0, 4.0, 800.0] {
                let d = k.unit_loss(x) - k.unit_loss(0.0);
                assert!(close(k.unit_excess(x), d, 1e-12 * (1.0 + x.abs())), "{k} at {x}");
            }
            // tiny residuals keep full relative precision
            let x = 1e-9;
            let e = k.unit_excess(x);
            let lead = 0.5 * 2.0 * k.density(0.0) * x * x;
            assert!((e - lead).abs() <= 1e-6 * lead, "{k}: {e} vs {lead}");
        }
    }

    fn fd_first(l: &SmoothedLoss, r: f64) -> f64 {
        let h = 1e-5 * r.abs().max(1.0) * l.delta().min(1.0);
        (l.value(r + h) - l.value(r - h)) / (2.0 * h)
    }

    fn fd_second(l: &SmoothedLoss, r: f64) -> f64 {
        let h = 1e-5 * r.abs().max(1.0) * l.delta().min(1.0);
        (l.deriv(r + h) - l.deriv(r - h)) / (2.0 * h)
    }

    #[test]
    fn finite_differences_match_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in KernelKind::ALL {
            for _ in 0..100 {
                let delta = 10f64.powf(rng.random_range(-2.0..1.0));
                let r = delta * rng.random_range(-4.0..4.0);
                let l = SmoothedLoss::new(k, delta).unwrap();
                let d = l.deriv(r);
                let err1 = (fd_first(&l, r) - d).abs() / d.abs().max(1.0);
                assert!(err1 <= 1e-6, "{k} δ={delta} r={r}: {err1}");
                let u = r / delta;
                let near_kink = k.is_compact() && ((u.abs() - 1.0).abs() < 1e-3)
                    || (k == KernelKind::Triangular && u.abs() < 1e-3);
                if near_kink {
                    continue;
                }
                let d2 = l.second_deriv(r);
                let err2 = (fd_second(&l, r) - d2).abs() / d2.abs().max(1.0 / delta);
                assert!(err2 <= 1e-5, "{k} δ={delta} r={r}: {err2}");
            }
        }
    }

    #[test]
    fn l1_gap_is_attained_at_zero() {
        for k in KernelKind::ALL {
            // coarse grid over [-100, 100], then refine around the best point
            let mut best = (0.0, f64::NEG_INFINITY);
            for i in 0..=20_000 {
                let x = -100.0 + i as f64 * 0.01;
                let g = (k.unit_loss(x) - x.abs()).abs();
                if g > best.1 {
                    best = (x, g);
                }
            }
            for i in 0..=2000 {
                let x = best.0 - 0.01 + i as f64 * 1e-5;
                let g = (k.unit_loss(x) - x.abs()).abs();
                if g > best.1 {
                    best = (x, g);
                }
            }
            assert!(close(best.1, unit_gap_at_zero(k), 1e-12), "{k}: {best:?}");
            assert!(best.0.abs() < 1e-4);
        }
        // sup |l_δ − |r|| = δ for pseudo-Huber
        let l = SmoothedLoss::new(KernelKind::PseudoHuber, 0.3).unwrap();
        assert!(close(l.value(0.0), 0.3, 1e-15));
    }

    /// Per-kernel `C₁ = inf_{0<|x|≤1} e(x)/x²` and `C₂ = inf_{|x|≥1} e(x)/|x|`
    /// from a dense grid; then `e(x) ≥ min(C₁x², C₂|x|)` on random points.
    #[test]
    fn quadratic_linear_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in KernelKind::ALL {
            let mut c1 = f64::INFINITY;
            let mut c2 = f64::INFINITY;
            for i in 1..=200_000 {
                let x = i as f64 * 1e-2 / 2.0; // (0, 1000]
                let e = k.unit_excess(x);
                if x <= 1.0 {
                    c1 = c1.min(e / (x * x));
                } else {
                    c2 = c2.min(e / x);
                }
            }
            assert!(c1 > 0.0 && c2 > 0.0, "{k}: C1={c1} C2={c2}");
            for _ in 0..1000 {
                let delta = 10f64.powf(rng.random_range(-2.0..1.0));
                let r = delta * rng.random_range(-1000.0..1000.0);
                let l = SmoothedLoss::new(k, delta).unwrap();
                let lower = (c1 / delta * r * r).min(c2 * r.abs());
                assert!(l.excess(r) >= lower * (1.0 - 1e-9), "{k} δ={delta} r={r}");
            }
        }
    }

    proptest! {
        #[test]
        fn scaling_law(delta in 0.01f64..10.0, r in -50.0f64..50.0) {
            for k in KernelKind::ALL {
                let l = SmoothedLoss::new(k, delta).unwrap();
                let unit = SmoothedLoss::new(k, 1.0).unwrap();
                let lhs = l.value(r);
                let rhs = delta * unit.value(r / delta);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }

        #[test]
        fn loss_is_even_convex_and_bounded_derivative(delta in 0.01f64..10.0, r in -50.0f64..50.0) {
            for k in KernelKind::ALL {
                let l = SmoothedLoss::new(k, delta).unwrap();
                prop_assert_eq!(l.value(r), l.value(-r));
                prop_assert_eq!(l.deriv(r), -l.deriv(-r));
                prop_assert!(l.value(r) >= l.value(0.0));
                prop_assert!(l.deriv(r).abs() <= 1.0);
                prop_assert!(l.second_deriv(r) >= 0.0);
                prop_assert!((l.value(r) - r.abs()).abs() <= unit_gap_at_zero(k) * delta * (1.0 + 1e-12));
                let m = 0.5 * (l.value(r) + l.value(r + 1.0));
                prop_assert!(l.value(r + 0.5) <= m + 1e-12 * m.abs().max(1.0));
            }
        }
    }
}
