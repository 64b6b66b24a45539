use proptest::prelude::*;
use rand::Rng;
use srpr::numeric;
use srpr::rng::{stream_rng, Stream};
use srpr::smoothed_loss::unit_gap_at_zero;
use srpr::*;

fn gaussian_instance(p: usize, n: usize, p_fail: f64, seed: u64) -> Instance {
    let x = synthetic_signal(p, seed);
    let ens = SensingEnsemble::gaussian(p, n, seed).unwrap();
    let spec = CorruptionSpec::new(p_fail, CorruptionKind::HalfCauchy, 0.0).unwrap();
    generate_instance(ens, &x, spec, seed).unwrap()
}

fn ball_point<R: Rng>(rng: &mut R, p: usize, radius: f64) -> Vec<f64> {
    let dir = numeric::unit_sphere(rng, p);
    let u: f64 = rng.random();
    numeric::scale(&dir, radius * u.powf(1.0 / p as f64))
}

/// Central difference of `F_δ` along `d`.
fn directional_fd(obj: &Objective<'_>, x: &[f64], d: &[f64], h: f64) -> f64 {
    let plus = obj.f_delta(&numeric::axpy(x, h, d)).unwrap();
    let minus = obj.f_delta(&numeric::axpy(x, -h, d)).unwrap();
    (plus - minus) / (2.0 * h)
}

#[test]
fn hand_computed_values() {
    let ens = SensingEnsemble::from_rows(1, 1, vec![1.0]).unwrap();
    let inst = Instance::from_measurements(ens.clone(), vec![4.0]).unwrap();
    let loss = SmoothedLoss::new(KernelKind::PseudoHuber, 3.0).unwrap();
    assert_eq!(Objective::new(&inst, loss).f_ell1(&[1.0]).unwrap(), 3.0);
    let inst = Instance::from_measurements(ens, vec![0.0]).unwrap();
    let f = Objective::new(&inst, loss).f_delta(&[2.0]).unwrap();
    assert!((f - 5.0).abs() < 1e-14);
}

#[test]
fn noiseless_truth_values() {
    let inst = gaussian_instance(16, 128, 0.0, 3);
    let xs = inst.x_star().unwrap().to_vec();
    let loss = SmoothedLoss::new(KernelKind::PseudoHuber, 0.25).unwrap();
    let obj = Objective::new(&inst, loss);
    assert!(obj.f_ell1(&xs).unwrap().abs() < 1e-15);
    assert!(obj.f_ell1(&numeric::scale(&xs, -1.0)).unwrap().abs() < 1e-15);
    assert!((obj.f_delta(&xs).unwrap() - 0.25).abs() < 1e-15);
    assert!(obj.gradient(&xs).unwrap().iter().all(|g| g.abs() < 1e-15));
    assert!(obj.gradient(&[0.0; 16]).unwrap().iter().all(|&g| g == 0.0));
    let stats = obj.landscape_stats(&xs).unwrap();
    assert!(stats.u1.abs() < 1e-15 && stats.u3.abs() < 1e-15);
    let ax = inst.ensemble.apply(&xs).unwrap();
    let want = 4.0 / 128.0 * ax.iter().map(|a| a.powi(4)).sum::<f64>() * loss.second_deriv(0.0);
    assert!((stats.u2 - want).abs() <= 1e-12 * want);
    assert_eq!(obj.landscape_stats(&[0.0; 16]).unwrap().u1, 0.0);
}

#[test]
fn smoothing_gap_is_bounded_by_c0_delta() {
    let inst = gaussian_instance(10, 80, 0.1, 4);
    let mut rng = stream_rng(4, Stream::Probe);
    for kernel in KernelKind::ALL {
        let c0 = unit_gap_at_zero(kernel);
        for delta in [1.0, 0.1, 0.01] {
            let obj = Objective::new(&inst, SmoothedLoss::new(kernel, delta).unwrap());
            for _ in 0..20 {
                let x = ball_point(&mut rng, 10, 3.0);
                let gap = (obj.f_delta(&x).unwrap() - obj.f_ell1(&x).unwrap()).abs();
                assert!(gap <= c0 * delta * (1.0 + 1e-12), "{kernel:?} δ={delta}: {gap}");
            }
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let inst = gaussian_instance(20, 100, 0.1, 5);
    let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::Gaussian, 0.5).unwrap());
    let mut rng = stream_rng(5, Stream::Probe);
    for _ in 0..100 {
        let x = ball_point(&mut rng, 20, 2.0);
        let d = numeric::unit_sphere(&mut rng, 20);
        let g = obj.gradient(&x).unwrap();
        let exact = numeric::dot(&g, &d);
        let fd = directional_fd(&obj, &x, &d, 1e-5);
        let scale = numeric::norm(&g).max(1e-8);
        assert!((exact - fd).abs() <= 1e-5 * scale, "{exact} vs {fd}");
    }
}

#[test]
fn hessian_quadform_matches_gradient_differences() {
    let inst = gaussian_instance(12, 96, 0.0, 6);
    let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::Logistic, 0.5).unwrap());
    let mut rng = stream_rng(6, Stream::Probe);
    for _ in 0..30 {
        let x = ball_point(&mut rng, 12, 2.0);
        let w = numeric::standard_normal_vec(&mut rng, 12);
        let h = 1e-5;
        let gp = obj.gradient(&numeric::axpy(&x, h, &w)).unwrap();
        let gm = obj.gradient(&numeric::axpy(&x, -h, &w)).unwrap();
        let fd = numeric::dot(&numeric::sub(&gp, &gm), &w) / (2.0 * h);
        let q = obj.hess_quadform(&x, &w).unwrap();
        assert!((q - fd).abs() <= 1e-4 * q.abs().max(1e-6), "{q} vs {fd}");
        let hv = obj.hess_vec(&x, &w).unwrap();
        assert!((numeric::dot(&hv, &w) - q).abs() <= 1e-10 * q.abs().max(1.0));
    }
    assert_eq!(obj.hess_quadform(&[0.3; 12], &[0.0; 12]).unwrap(), 0.0);
}

#[test]
fn landscape_identities() {
    let inst = gaussian_instance(16, 128, 0.2, 7);
    let xs = inst.x_star().unwrap().to_vec();
    let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::PseudoHuber, 0.25).unwrap());
    let mut rng = stream_rng(7, Stream::Probe);
    for _ in 0..20 {
        let x = ball_point(&mut rng, 16, 2.0);
        let stats = obj.landscape_stats(&x).unwrap();
        let g = obj.gradient(&x).unwrap();
        assert!((stats.u1 - numeric::dot(&x, &g)).abs() <= 1e-10);
        assert!((stats.u3 - numeric::dot(&xs, &g)).abs() <= 1e-10);
        let pairing = numeric::dot(&g, &numeric::sub(&x, &xs));
        assert!((stats.u1 - stats.u3 - pairing).abs() <= 1e-10);
        let u2 = obj.hess_quadform(&x, &xs).unwrap();
        assert!((stats.u2 - u2).abs() <= 1e-10 * u2.abs().max(1.0));
        assert!((stats.grad_norm - numeric::norm(&g)).abs() <= 1e-12);
    }
}

#[test]
fn missing_truth_and_relative_error() {
    let ens = SensingEnsemble::gaussian(4, 8, 0).unwrap();
    let inst = Instance::from_measurements(ens, vec![1.0; 8]).unwrap();
    let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::Gaussian, 1.0).unwrap());
    assert!(matches!(obj.landscape_stats(&[0.0; 4]), Err(SrprError::MissingGroundTruth)));
    let xs = [0.5, -0.5, 0.5, 0.5];
    assert_eq!(relative_error(&[0.0; 4], &xs).unwrap(), 1.0);
    assert_eq!(relative_error(&numeric::scale(&xs, 2.0), &xs).unwrap(), 1.0);
    assert_eq!(relative_error(&numeric::scale(&xs, -1.0), &xs).unwrap(), 0.0);
    assert!(relative_error(&xs, &[0.0; 4]).is_err());
}

/// Largest curvature deficit `−2(F(y) − F(x) − ⟨∇F(x), y − x⟩)/‖y − x‖²`
/// over random nearby pairs in `B(0, 4)`, with `‖x‖` uniform on `[0, 4]`.
fn curvature_deficit(obj: &Objective<'_>, pairs: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, Stream::Probe);
    let p = obj.p();
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let radius: f64 = rng.random_range(0.0..3.9);
        let x = numeric::scale(&numeric::unit_sphere(&mut rng, p), radius);
        let y = numeric::axpy(&x, 0.1, &numeric::unit_sphere(&mut rng, p));
        let (fx, g) = obj.value_and_gradient(&x).unwrap();
        let d = numeric::sub(&y, &x);
        let lin = obj.f_delta(&y).unwrap() - fx - numeric::dot(&g, &d);
        worst = worst.max(-2.0 * lin / numeric::dot(&d, &d));
    }
    worst
}

#[test]
fn weak_convexity_deficit_does_not_grow_as_delta_shrinks() {
    let inst = gaussian_instance(16, 128, 0.1, 8);
    let rhos: Vec<f64> = [1.0, 0.25, 0.05]
        .iter()
        .map(|&delta| {
            let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::PseudoHuber, delta).unwrap());
            curvature_deficit(&obj, 200, 8)
        })
        .collect();
    let (lo, hi) = rhos.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    println!("weak convexity deficits {rhos:?}");
    assert!(lo > 0.0 && hi <= 2.0 * lo, "{rhos:?}");
}

#[test]
fn smoothed_gap_is_nonnegative_and_sharp() {
    let (p, delta) = (64, 0.25);
    let inst = gaussian_instance(p, 8 * p, 0.0, 9);
    let xs = inst.x_star().unwrap().to_vec();
    let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::PseudoHuber, delta).unwrap());
    let mut rng = stream_rng(9, Stream::Probe);
    let mut lambda = f64::INFINITY;
    for _ in 0..500 {
        let x = ball_point(&mut rng, p, 3.0);
        let gap = obj.f_delta_gap(&x, &xs).unwrap();
        assert!(gap >= 0.0);
        let dist = relative_error(&x, &xs).unwrap();
        lambda = lambda.min(gap / dist.min(dist * dist / delta));
    }
    println!("fitted sharpness constant {lambda:.4}");
    assert!(lambda > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sign_symmetry(seed in any::<u64>()) {
        let inst = gaussian_instance(8, 40, 0.1, seed % 1000);
        let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::Triangular, 0.3).unwrap());
        let mut rng = stream_rng(seed, Stream::Probe);
        let x = ball_point(&mut rng, 8, 3.0);
        let neg = numeric::scale(&x, -1.0);
        prop_assert_eq!(obj.f_delta(&x).unwrap(), obj.f_delta(&neg).unwrap());
        let g = obj.gradient(&x).unwrap();
        let gn = obj.gradient(&neg).unwrap();
        for (a, b) in g.iter().zip(&gn) {
            prop_assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn evaluations_are_reproducible(seed in any::<u64>()) {
        let inst = gaussian_instance(8, 2100, 0.1, seed % 100);
        let obj = Objective::new(&inst, SmoothedLoss::new(KernelKind::Gaussian, 0.1).unwrap());
        let mut rng = stream_rng(seed, Stream::Probe);
        let x = ball_point(&mut rng, 8, 2.0);
        prop_assert_eq!(obj.value_and_gradient(&x).unwrap(), obj.value_and_gradient(&x).unwrap());
    }
}
