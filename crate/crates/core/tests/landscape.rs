mod common;

use common::*;
use srpr::landscape::*;
use srpr::numeric;
use srpr::*;

/// Independent 30-digit evaluations of the ring-limit quantities.
const U0: f64 = 0.441_610_791_705_328_4;
const LIMIT_U2_AT_U0: f64 = -1.574_923_175_512_216;
const LIMIT_U2_AT_10: f64 = 1.993_329_896_294_776;

fn probe(kernel: KernelKind, delta: f64) -> PopulationProbe {
    PopulationProbe::new(SmoothedLoss::new(kernel, delta).unwrap())
}

#[test]
fn limit_constants() {
    let u0 = u0_limit();
    assert!((u0 - U0).abs() <= 1e-10);
    assert!(u0_residual(u0).abs() <= 1e-9);
    assert!(u0_residual(0.0) < 0.0 && u0_residual(1.0) > 0.0);
    assert!((limiting_u2(u0).unwrap() - LIMIT_U2_AT_U0).abs() <= 1e-9);
    assert!((limiting_u2(10.0).unwrap() - LIMIT_U2_AT_10).abs() <= 1e-12);
    assert!(limiting_u2(0.0).is_err());
}

#[test]
fn population_stationary_set() {
    let pr = probe(KernelKind::PseudoHuber, 0.05);
    let u = pr.solve_u_delta(U_DELTA_BRACKET).unwrap();
    for (c, s) in [(1.0, 0.0), (-1.0, 0.0), (0.0, u)] {
        assert!(pr.population_u1(c, s).unwrap().abs() <= 1e-5, "u1 at ({c}, {s})");
        assert!(pr.population_u3(c, s).unwrap().abs() <= 1e-5, "u3 at ({c}, {s})");
    }
    assert!(pr.population_u1(0.0, 0.0).unwrap().abs() <= 1e-5);
    assert!(pr.population_u2(0.0, u).unwrap() < 0.0);
    assert!(pr.population_u2(1.0, 0.0).unwrap() > 0.0);
    assert!(pr.population_quadform(0.0, 0.0, [1.0, 0.0]).unwrap() <= 0.0);
    for c in [1.0, -1.0] {
        assert!(pr.population_quadform(c, 0.0, [0.0, 1.0]).unwrap() > 0.0);
    }
}

#[test]
fn population_symmetries() {
    let pr = probe(KernelKind::Gaussian, 0.25);
    for s in [0.2, 0.7, 1.5] {
        assert!(pr.population_u3(0.0, s).unwrap().abs() <= 1e-6);
    }
    for c in [0.3, 0.6, 1.4] {
        let u1 = pr.population_u1(c, 0.0).unwrap();
        let u3 = pr.population_u3(c, 0.0).unwrap();
        assert!((u1 - c * u3).abs() <= 1e-5, "{u1} vs {c}·{u3}");
    }
    let a = pr.point(0.4, 0.9).unwrap();
    let b = pr.point(-0.4, 0.9).unwrap();
    assert!((a.f_delta - b.f_delta).abs() <= 1e-6 && (a.u1 - b.u1).abs() <= 1e-6);
    assert!(pr.population_u1(0.5, -0.1).is_err());
}

#[test]
fn radial_derivative_is_positive_far_out() {
    let pr = probe(KernelKind::PseudoHuber, 0.1);
    for k in 0..12 {
        let theta = std::f64::consts::PI * k as f64 / 11.0;
        let (c, s) = (10.0 * theta.cos(), 10.0 * theta.sin());
        assert!(pr.population_u1(c, s).unwrap() > 0.0, "angle {theta}");
    }
}

#[test]
fn ring_limit_is_kernel_independent() {
    let u0 = u0_limit();
    for kernel in [KernelKind::Gaussian, KernelKind::Logistic] {
        let pr = probe(kernel, 0.02);
        let u = pr.solve_u_delta(U_DELTA_BRACKET).unwrap();
        assert!((u - u0).abs() <= 0.02, "{kernel:?}: {u}");
        let u2 = pr.population_u2(0.0, u).unwrap();
        assert!((u2 - LIMIT_U2_AT_U0).abs() <= 0.05, "{kernel:?}: {u2}");
    }
}

#[test]
fn population_u2_approaches_the_limit_curve() {
    let pr = probe(KernelKind::Gaussian, 0.005);
    for u in [0.3, 0.44, 0.6] {
        let got = pr.population_u2(0.0, u).unwrap();
        let want = limiting_u2(u).unwrap();
        assert!((got - want).abs() <= 0.05, "u = {u}: {got} vs {want}");
    }
}

#[test]
fn quadrature_refinement_and_monte_carlo_agree() {
    let loss = SmoothedLoss::new(KernelKind::PseudoHuber, 0.1).unwrap();
    let coarse = PopulationProbe::new(loss);
    let fine = PopulationProbe::new(loss).with_quadrature(Quadrature::Adaptive { tol: 1e-11 });
    let mc = PopulationProbe::new(loss)
        .with_quadrature(Quadrature::MonteCarlo {
            samples: 1_000_000,
            seed: 3,
        })
        .with_tolerance(1.0);
    for (c, s) in [(0.5, 0.5), (1.2, 0.1), (0.0, 0.8)] {
        for f in [Functional::Value, Functional::U1, Functional::QuadForm([1.0, 0.0])] {
            let a = coarse.estimate(f, c, s).unwrap();
            let b = fine.estimate(f, c, s).unwrap();
            assert!((a.value - b.value).abs() <= 1e-6, "{f:?} at ({c}, {s})");
            let m = mc.estimate(f, c, s).unwrap();
            assert!((m.value - b.value).abs() <= 5.0 * m.error, "{f:?} at ({c}, {s}): {} ± {}", m.value, m.error);
        }
    }
}

#[test]
fn ring_radius_solver() {
    let pr = probe(KernelKind::PseudoHuber, 0.5);
    let lo = pr.ring_function(U_DELTA_BRACKET.0).unwrap();
    let hi = pr.ring_function(U_DELTA_BRACKET.1).unwrap();
    assert!(lo < 0.0 && hi > 0.0);
    let grid: Vec<f64> = (1..=10).map(|i| pr.ring_function(0.2 * i as f64).unwrap()).collect();
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
    let u = pr.solve_u_delta((0.6, 0.9)).unwrap();
    assert!((u - pr.solve_u_delta(U_DELTA_BRACKET).unwrap()).abs() <= 2e-6);
    assert!(pr.solve_u_delta((-1.0, 1.0)).is_err());
}

#[test]
fn ring_curvature_scan() {
    let pr = PopulationProbe::new(SmoothedLoss::new(KernelKind::PseudoHuber, 1.0).unwrap());
    let scan = ring_scan(&pr, &[1.0, 0.25, 0.05]).unwrap();
    for pt in &scan {
        println!("δ = {}: u(δ) = {:.4}, ring u2 = {:.4}", pt.delta, pt.u_delta, pt.u2);
    }
    assert_eq!(scan.len(), 3);
    assert!(scan[2].u2 < 0.0);
}

#[test]
fn empirical_grid_symmetry_and_minimizers() {
    let p = 64;
    let inst = noiseless(p, 8 * p, 21);
    let loss = SmoothedLoss::new(KernelKind::PseudoHuber, 0.25).unwrap();
    let spec = GridSpec {
        u: Axis::new(-1.5, 1.5, 31),
        v: Axis::new(-1.5, 1.5, 31),
        seed: 4,
    };
    let grid = empirical_scan(&inst, loss, &spec).unwrap();
    let xs = inst.x_star().unwrap();
    assert!(numeric::dot(&grid.x_perp, xs).abs() <= 1e-12);
    assert!((numeric::norm(&grid.x_perp) - 1.0).abs() <= 1e-12);

    let plus = grid.cell(25, 15);
    let minus = grid.cell(5, 15);
    assert!((plus.u - 1.0).abs() < 1e-12 && plus.v.abs() < 1e-12);
    assert!(plus.grad_norm <= 1e-12);
    assert_eq!(
        (plus.f_delta, plus.grad_norm, plus.u1),
        (minus.f_delta, minus.grad_norm, minus.u1)
    );

    let u_delta = PopulationProbe::new(loss).solve_u_delta(U_DELTA_BRACKET).unwrap();
    let centers = [(1.0, 0.0), (-1.0, 0.0), (0.0, 0.0), (0.0, u_delta), (0.0, -u_delta)];
    for cell in grid.near_stationary(1e-3) {
        let near = centers
            .iter()
            .any(|(a, b)| ((cell.u - a).powi(2) + (cell.v - b).powi(2)).sqrt() <= 0.2);
        assert!(near, "unexpected near-stationary cell at ({}, {})", cell.u, cell.v);
    }

    let mut csv = Vec::new();
    grid.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("u,v,f_delta,grad_norm,u1,u2,u3"));
    assert_eq!(text.lines().count(), 1 + 31 * 31);
}

#[test]
fn radial_profile_is_monotone() {
    let us: Vec<f64> = (0..100).map(|i| 0.1 + 9.9 * i as f64 / 99.0).collect();
    let loss = SmoothedLoss::new(KernelKind::Logistic, 0.1).unwrap();
    for seed in 0..5 {
        let inst = gaussian_instance(16, 128, 0.2, CorruptionKind::HalfCauchy, seed);
        let dir = perturbed_truth(&inst, 2.0, seed);
        assert!(monotone_u1_check(&inst, loss, &dir, &us).unwrap());
        let mut scaled = inst.clone();
        scaled.b.iter_mut().for_each(|b| *b *= 4.0);
        assert!(monotone_u1_check(&scaled, loss, &dir, &us).unwrap());
    }
    let clean = noiseless(16, 64, 9);
    let dir = perturbed_truth(&clean, 1.0, 9);
    let tail = u1_profile(&clean, loss, &dir, &[10.0]).unwrap();
    assert!(tail[0] > 0.0);
    assert!(u1_profile(&clean, loss, &[0.0; 16], &[1.0]).is_err());
}

#[test]
fn vicinity_fit_on_a_known_table() {
    let mut points = Vec::new();
    for delta in [0.1, 0.25, 0.5] {
        for p_fail in [0.05, 0.1, 0.2] {
            for rep in 0..3 {
                let rel_error = delta * p_fail / (1.0 - p_fail) * (1.0 + 0.01 * rep as f64);
                points.push(VicinityPoint { delta, p_fail, rel_error });
            }
        }
    }
    let fit = vicinity_radius_fit(&points).unwrap();
    assert_eq!(fit.cells.len(), 9);
    assert!((fit.spearman_delta - 1.0).abs() < 1e-12);
    assert!((fit.spearman_p_fail - 1.0).abs() < 1e-12);
    assert!((fit.fit.slope - 1.01).abs() < 1e-9, "{:?}", fit.fit);

    let short: Vec<VicinityPoint> = points.iter().copied().filter(|p| p.delta != 0.5).collect();
    assert!(vicinity_radius_fit(&short).is_err());
}
