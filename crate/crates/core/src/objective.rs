//! The ℓ1 objective `F(x) = (1/n)Σ|(aᵢᵀx)² − bᵢ|`, its smoothed counterpart
//! `F_δ`, and derivative information for `F_δ`.
//!
//! Every evaluation performs one product with `A` (and one with `Aᵀ` for
//! gradients) and reduces over measurements with [`numeric::blocked_sum_by`],
//! so results are bitwise reproducible. Evaluation at `−x` is the exact mirror
//! of evaluation at `x`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, SrprError};
use crate::measurement::Instance;
use crate::numeric::{self, blocked_sum_by};
use crate::smoothed_loss::SmoothedLoss;

/// Empirical means of the radial and truth-direction landscape probes at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeStats {
    /// `⟨x, ∇F_δ(x)⟩`
    pub u1: f64,
    /// `x⋆ᵀ ∇²F_δ(x) x⋆`
    pub u2: f64,
    /// `⟨x⋆, ∇F_δ(x)⟩`
    pub u3: f64,
    pub grad_norm: f64,
    pub f_delta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    instance: &'a Instance,
    loss: SmoothedLoss,
}

impl<'a> Objective<'a> {
    pub fn new(instance: &'a Instance, loss: SmoothedLoss) -> Self {
        Objective { instance, loss }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn loss(&self) -> SmoothedLoss {
        self.loss
    }

    pub fn p(&self) -> usize {
        self.instance.p()
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    fn inv_n(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// `Ax` after a dimension check.
    pub fn products(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.p(), x.len())?;
        Ok(self.instance.ensemble.forward(x))
    }

    /// `(aᵢᵀx)² − bᵢ` from precomputed products.
    pub fn residual(&self, ax: &[f64], i: usize) -> f64 {
        ax[i] * ax[i] - self.instance.b[i]
    }

    pub fn f_ell1(&self, x: &[f64]) -> Result<f64> {
        let ax = self.products(x)?;
        Ok(self.f_ell1_from_products(&ax))
    }

    pub fn f_ell1_from_products(&self, ax: &[f64]) -> f64 {
        blocked_sum_by(ax.len(), |i| self.residual(ax, i).abs()) * self.inv_n()
    }

    pub fn f_delta(&self, x: &[f64]) -> Result<f64> {
        let ax = self.products(x)?;
        Ok(self.f_delta_from_products(&ax))
    }

    pub fn f_delta_from_products(&self, ax: &[f64]) -> f64 {
        let l = self.loss;
        blocked_sum_by(ax.len(), |i| l.value(self.residual(ax, i))) * self.inv_n()
    }

    /// `F_δ(x) − l_δ(0)` from precomputed products. Differences of this shifted
    /// value stay accurate when `F_δ` itself is dominated by `l_δ(0)`.
    pub fn f_delta_shifted_from_products(&self, ax: &[f64]) -> f64 {
        let l = self.loss;
        blocked_sum_by(ax.len(), |i| l.excess(self.residual(ax, i))) * self.inv_n()
    }

    /// `F_δ(x) − F_δ(y)`, summed term by term from `l_δ(r) − l_δ(0)` so that
    /// tiny gaps keep their relative accuracy.
    pub fn f_delta_gap(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let ax = self.products(x)?;
        let ay = self.products(y)?;
        let l = self.loss;
        Ok(blocked_sum_by(ax.len(), |i| {
            l.excess(self.residual(&ax, i)) - l.excess(self.residual(&ay, i))
        }) * self.inv_n())
    }

    /// `∇F_δ(x) = Aᵀw` with `wᵢ = (2/n) l′_δ(rᵢ) aᵢᵀx`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(x)?.1)
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ax = self.products(x)?;
        let f = self.f_delta_from_products(&ax);
        let g = self.gradient_from_products(&ax);
        Ok((f, g))
    }

    pub fn gradient_from_products(&self, ax: &[f64]) -> Vec<f64> {
        let c = 2.0 * self.inv_n();
        let w: Vec<f64> = (0..ax.len())
            .map(|i| c * self.loss.deriv(self.residual(ax, i)) * ax[i])
            .collect();
        self.instance.ensemble.adjoint(&w)
    }

    /// Per-measurement Hessian weights `(1/n)[2l′_δ(rᵢ) + 4(aᵢᵀx)² l″_δ(rᵢ)]`.
    fn hessian_weights(&self, ax: &[f64]) -> Vec<f64> {
        let inv_n = self.inv_n();
        (0..ax.len())
            .map(|i| {
                let r = self.residual(ax, i);
                inv_n * (2.0 * self.loss.deriv(r) + 4.0 * ax[i] * ax[i] * self.loss.second_deriv(r))
            })
            .collect()
    }

    /// `wᵀ ∇²F_δ(x) w`
    pub fn hess_quadform(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        check_len(self.p(), w.len())?;
        let ax = self.products(x)?;
        let aw = self.instance.ensemble.forward(w);
        let h = self.hessian_weights(&ax);
        Ok(blocked_sum_by(ax.len(), |i| h[i] * aw[i] * aw[i]))
    }

    /// `∇²F_δ(x) w`
    pub fn hess_vec(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.p(), w.len())?;
        let ax = self.products(x)?;
        Ok(self.hess_vec_from_products(&ax, w))
    }

    pub(crate) fn hess_vec_from_products(&self, ax: &[f64], w: &[f64]) -> Vec<f64> {
        let aw = self.instance.ensemble.forward(w);
        let h = self.hessian_weights(ax);
        let v: Vec<f64> = h.iter().zip(&aw).map(|(a, b)| a * b).collect();
        self.instance.ensemble.adjoint(&v)
    }

    pub fn landscape_stats(&self, x: &[f64]) -> Result<LandscapeStats> {
        let x_star = self.instance.x_star()?;
        let ax = self.products(x)?;
        let axs = self.instance.ensemble.forward(x_star);
        let c = 2.0 * self.inv_n();
        let lp: Vec<f64> = (0..ax.len())
            .map(|i| self.loss.deriv(self.residual(&ax, i)))
            .collect();
        let u1 = blocked_sum_by(ax.len(), |i| c * lp[i] * ax[i] * ax[i]);
        let u3 = blocked_sum_by(ax.len(), |i| c * lp[i] * ax[i] * axs[i]);
        let h = self.hessian_weights(&ax);
        let u2 = blocked_sum_by(ax.len(), |i| h[i] * axs[i] * axs[i]);
        let grad = self.gradient_from_products(&ax);
        Ok(LandscapeStats {
            u1,
            u2,
            u3,
            grad_norm: numeric::norm(&grad),
            f_delta: self.f_delta_from_products(&ax),
        })
    }
}

/// `min(‖x − x⋆‖, ‖x + x⋆‖) / ‖x⋆‖`
pub fn relative_error(x: &[f64], x_star: &[f64]) -> Result<f64> {
    check_len(x_star.len(), x.len())?;
    let ns = numeric::norm(x_star);
    if ns == 0.0 {
        return Err(SrprError::ZeroGroundTruth);
    }
    let minus = blocked_sum_by(x.len(), |i| (x[i] - x_star[i]).powi(2));
    let plus = blocked_sum_by(x.len(), |i| (x[i] + x_star[i]).powi(2));
    Ok(minus.min(plus).sqrt() / ns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{generate_instance, synthetic_signal, CorruptionSpec, SensingEnsemble};
    use crate::smoothed_loss::KernelKind;

    fn one_by_one(a: f64, b: f64) -> Instance {
        let e = SensingEnsemble::from_rows(1, 1, vec![a]).unwrap();
        Instance::from_measurements(e, vec![b]).unwrap()
    }

    fn noiseless(p: usize, n: usize, seed: u64) -> Instance {
        let e = SensingEnsemble::gaussian(p, n, seed).unwrap();
        generate_instance(e, &synthetic_signal(p, seed), CorruptionSpec::none(), seed).unwrap()
    }

    fn ph(delta: f64) -> SmoothedLoss {
        SmoothedLoss::new(KernelKind::PseudoHuber, delta).unwrap()
    }

    #[test]
    fn hand_arithmetic() {
        let inst = one_by_one(1.0, 4.0);
        assert_eq!(Objective::new(&inst, ph(1.0)).f_ell1(&[1.0]).unwrap(), 3.0);
        let inst = one_by_one(1.0, 0.0);
        assert_eq!(Objective::new(&inst, ph(3.0)).f_delta(&[2.0]).unwrap(), 5.0);
    }

    #[test]
    fn truth_is_a_zero_of_f_and_gradient() {
        let inst = noiseless(6, 40, 3);
        let xs = inst.x_star.clone().unwrap();
        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        let obj = Objective::new(&inst, ph(0.5));
        assert_eq!(obj.f_ell1(&xs).unwrap(), 0.0);
        assert_eq!(obj.f_ell1(&neg).unwrap(), 0.0);
        assert!((obj.f_delta(&xs).unwrap() - 0.5).abs() < 1e-15);
        assert!(obj.gradient(&xs).unwrap().iter().all(|&g| g == 0.0));
        assert!(obj.gradient(&[0.0; 6]).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn stats_at_truth_and_origin() {
        let inst = noiseless(5, 60, 8);
        let xs = inst.x_star.clone().unwrap();
        let obj = Objective::new(&inst, ph(0.2));
        let s = obj.landscape_stats(&xs).unwrap();
        assert_eq!(s.u1, 0.0);
        assert_eq!(s.u3, 0.0);
        assert!(s.u2 > 0.0);
        assert_eq!(obj.landscape_stats(&[0.0; 5]).unwrap().u1, 0.0);
        assert_eq!(obj.hess_quadform(&xs, &[0.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn relative_error_cases() {
        let xs = [3.0, 4.0];
        assert_eq!(relative_error(&[-3.0, -4.0], &xs).unwrap(), 0.0);
        assert_eq!(relative_error(&[0.0, 0.0], &xs).unwrap(), 1.0);
        assert_eq!(relative_error(&[6.0, 8.0], &xs).unwrap(), 1.0);
        assert!(relative_error(&[1.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn missing_truth_is_an_error() {
        let inst = one_by_one(1.0, 1.0);
        assert!(matches!(
            Objective::new(&inst, ph(1.0)).landscape_stats(&[1.0]),
            Err(SrprError::MissingGroundTruth)
        ));
    }
}
