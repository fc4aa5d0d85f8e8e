use std::f64::consts::PI;

use mcac_core::analysis::{
    ansatz_residual, convergence_study_with, error_vs_ansatz, hausdorff, interpolation_ratio, probe_grid, AnsatzFrame,
    StudyConfig,
};
use mcac_core::io::{fmt_f64, fmt_opt, CsvTable};
use mcac_core::profile::SampledRhs;
use mcac_core::spectrum::{analyze, assemble, build_psi, cell_grid, rayleigh_quotient};
use mcac_core::{
    compute_theta0, compute_theta1, prepare_initial, run, signed_distance, solve_linearized, CorrectorProfile,
    DoubleWell, GridSpec, Polyline, Shape, SimConfig, TubularChart, WaveProfile,
};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn profiles() -> (WaveProfile, CorrectorProfile) {
    let p = compute_theta0(&DoubleWell::cubic(), 12.0, 4801).unwrap();
    let c = compute_theta1(&p).unwrap();
    (p, c)
}

#[test]
fn potential_derivative_and_equal_wells() {
    let w = DoubleWell::cubic();
    let h = 1e-5;
    let worst = (0..10_000)
        .map(|k| -2.0 + 4.0 * k as f64 / 9_999.0)
        .map(|u| ((w.potential(u + h) - w.potential(u - h)) / (2.0 * h) + w.f(u)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst:e}");
    let integral = mcac_core::numeric::gauss_legendre(|s| w.f(s), -1.0, 1.0, 16);
    assert!(integral.abs() <= 1e-12, "{integral:e}");
}

#[test]
fn profile_satisfies_its_equation_on_a_fine_grid() {
    let p = compute_theta0(&DoubleWell::cubic(), 12.0, 10_001).unwrap();
    assert!(p.substitution_residual() <= 1e-6, "{:e}", p.substitution_residual());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linearized_solve_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let (p, _) = profiles();
        let sigma = p.sigma;
        let h1 = SampledRhs::from_fn(&p, |i, _| 1.0 - sigma * p.dtheta0[i], 1.0, 1.0);
        let h2 = SampledRhs::from_fn(&p, |_, rho| p.d2theta0_at(rho), 0.0, 0.0);
        let q1 = solve_linearized(&p, &h1).unwrap();
        let q2 = solve_linearized(&p, &h2).unwrap();
        let q = solve_linearized(&p, &SampledRhs::scaled_sum(a, &h1, b, &h2)).unwrap();
        let worst = q.values.iter().zip(q1.values.iter().zip(&q2.values))
            .map(|(v, (x, y))| (v - a * x - b * y).abs())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-10, "{:e}", worst);
    }

    #[test]
    fn hausdorff_is_a_symmetric_metric(
        a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..12),
        b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..12),
        c in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..12),
    ) {
        let line = |v: &[(f64, f64)]| Polyline::open(v.iter().map(|&(x, y)| [x, y]).collect());
        let (a, b, c) = (line(&a), line(&b), line(&c));
        let ab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
        let ac = hausdorff(&a, &c).unwrap();
        let cb = hausdorff(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn interpolation_ratio_is_scale_invariant(
        coefs in prop::collection::vec(-1.0..1.0f64, 4),
        c in prop_oneof![Just(0.1), Just(10.0), 0.1..10.0f64],
    ) {
        let g = probe_grid(1).unwrap();
        let mut values: Vec<f64> = (0..g.nx)
            .map(|i| {
                let x = g.x(i) + 0.5;
                coefs.iter().enumerate().map(|(k, a)| a * (PI * (k + 1) as f64 * x).cos()).sum()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        prop_assume!(values.iter().any(|v| v.abs() > 1e-3));
        let base = interpolation_ratio(&values, &g).unwrap().ratio;
        let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
        let r = interpolation_ratio(&scaled, &g).unwrap().ratio;
        prop_assert!((r - base).abs() <= 1e-10);
    }

    #[test]
    fn zero_mean_minimizer_is_consistent(eps in 0.04..0.2f64, p_eps in 0.0..2.0f64) {
        let (p, c) = profiles();
        let n = (2.0 / (0.25 * eps)).ceil() as usize;
        let grid = cell_grid(n);
        let a = build_psi(&p, &c, &grid.points(), grid, eps, p_eps).unwrap();
        let report = analyze(&a, &DoubleWell::cubic()).unwrap();
        let op = assemble(&a, &DoubleWell::cubic()).unwrap();
        let q = rayleigh_quotient(&op, &report.eigvec);
        prop_assert!((q - report.lam_min_zero_mean).abs() <= 1e-8 * report.lam_min_zero_mean.abs().max(1.0));
        let mass: f64 = report.eigvec.iter().sum::<f64>() * report.h;
        prop_assert!(mass.abs() <= 1e-10, "{:e}", mass);
        prop_assert!(report.lam_min_all <= report.lam_min_zero_mean + 1e-9);
    }
}

#[test]
fn projection_identity_in_the_tube() {
    let shape = Shape::ellipse(0.6, 0.4);
    let g = GridSpec::square(200, 1.0).unwrap();
    let h = g.h();
    let lf = signed_distance(&shape, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 1000 {
        let i = rng.random_range(1..g.nx - 1);
        let j = rng.random_range(1..g.ny - 1);
        let d = lf.at(i, j);
        if d.abs() >= 3.0 * lf.delta {
            continue;
        }
        let x = g.point(i, j);
        let grad = lf.gradient_at(i, j);
        let foot = shape.closest_point(x);
        let err = (foot[0] - (x[0] - d * grad[0])).hypot(foot[1] - (x[1] - d * grad[1]));
        assert!(err <= 5.0 * h, "at {x:?}: {err:e}");
        checked += 1;
    }
    assert!(lf.eikonal_defect() <= 5.0 * h);
}

#[test]
fn distance_gradient_is_orthogonal_to_arclength_gradient() {
    let shape = Shape::ellipse(0.6, 0.4);
    let h = 2.0 / 200.0;
    let perimeter = shape.perimeter();
    for sample in shape.front_samples(64) {
        let x = sample.point;
        let grad = |f: &dyn Fn([f64; 2]) -> f64| {
            let gx = (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h);
            let gy = (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h);
            [gx, gy]
        };
        let gd = grad(&|p| shape.distance(p));
        // Unwrap S across its cut at the parametrisation origin.
        let s0 = shape.arclength_of(x);
        let gs = grad(&|p| {
            let s = shape.arclength_of(p);
            s - perimeter * ((s - s0) / perimeter).round()
        });
        let dot = gd[0] * gs[0] + gd[1] * gs[1];
        assert!(dot.abs() <= 10.0 * h, "at {x:?}: {dot:e}");
    }
}

#[test]
fn tube_integral_of_profile_energy() {
    let (p, _) = profiles();
    let chart = TubularChart::from_shape(&Shape::circle(1.0), 512, 0.6, 0.05).unwrap();
    let value = chart.tube_integrate(|rho, _| p.dtheta0_at(rho).powi(2), 12.0).unwrap();
    assert!((value - 0.29623).abs() <= 1e-3, "{value}");
}

#[test]
fn tube_integral_matches_grid_quadrature() {
    let (p, _) = profiles();
    let (r, eps) = (0.7, 0.05);
    let chart = TubularChart::from_shape(&Shape::circle(r), 512, 0.25, eps).unwrap();
    let g = GridSpec::square(400, 1.0).unwrap();
    let lf = signed_distance(&Shape::circle(r), &g).unwrap();
    for (name, weight) in [("θ₀'²", 0), ("θ₀'²ρ²", 2)] {
        let f = |rho: f64| p.dtheta0_at(rho).powi(2) * rho.powi(weight);
        let tube = chart.tube_integrate(|rho, _| f(rho), 5.0).unwrap();
        let grid: f64 = lf.d.iter().filter(|d| d.abs() <= 5.0 * eps).map(|d| f(d / eps)).sum::<f64>() * g.cell_volume();
        assert!(((tube - grid) / tube).abs() <= 0.01, "{name}: tube {tube}, grid {grid}");
    }
}

#[test]
fn one_dimensional_mass_over_ten_thousand_steps() {
    let (p, c) = profiles();
    let eps = 0.05;
    let g = GridSpec::line(100, 1.0).unwrap();
    let lf = signed_distance(&Shape::Line { offset: 0.2 }, &g).unwrap();
    let u0 = prepare_initial(&lf, &p, &c, eps, 0).unwrap();
    let mut cfg = SimConfig::new(eps, 0.0, g);
    cfg.t_end = 10_000.0 * cfg.dt;
    cfg.record_every = 100;
    let traj = run(&cfg, &u0).unwrap();
    let drift = traj.max_mass_drift() / g.domain_measure();
    assert!(drift <= 1e-12, "{drift:e}");
}

fn study_csv(cfg: &StudyConfig) -> String {
    let (rows, _) = convergence_study_with(cfg).unwrap();
    let mut t = CsvTable::new(&["eps", "front_err", "front_order", "lambda_err", "lambda_order"]);
    for r in rows {
        t.push(vec![fmt_f64(r.eps), fmt_f64(r.front_err), fmt_opt(r.front_order), fmt_f64(r.lambda_err), fmt_opt(r.lambda_order)])
            .unwrap();
    }
    t.to_csv_string()
}

#[test]
fn convergence_study_is_deterministic() {
    let cfg = StudyConfig::new(Shape::ellipse(0.6, 0.45), vec![0.1, 0.05], 0.02, 1);
    assert_eq!(study_csv(&cfg), study_csv(&cfg));
}

/// `sup_t ‖u − ũ‖` for the stationary circle against its mass-corrected
/// order-1 ansatz on a grid with `h = ε/2`.
fn circle_ansatz_error(eps: f64) -> (f64, f64) {
    let (p, c) = profiles();
    let n = (2.0 / (0.5 * eps)).ceil() as usize;
    let g = GridSpec::square(n, 1.0).unwrap();
    let shape = Shape::circle(0.7);
    let lf = signed_distance(&shape, &g).unwrap();
    let u0 = prepare_initial(&lf, &p, &c, eps, 1).unwrap();
    let mut cfg = SimConfig::new(eps, 0.1, g);
    cfg.keep_fields = true;
    cfg.extract_fronts = false;
    let steps = cfg.schedule().0;
    cfg.record_every = (steps / 10).max(1);
    let traj = run(&cfg, &u0).unwrap();
    let frames: Vec<AnsatzFrame> =
        traj.fields.iter().map(|(t, _)| AnsatzFrame::from_shape(*t, &shape, &g, p.sigma).unwrap()).collect();
    let ansatz = ansatz_residual(&frames, &p, &c, eps, 1).unwrap();
    let err = error_vs_ansatz(&traj, &ansatz.fields).unwrap();
    (err.initial, err.sup)
}

#[test]
fn ansatz_error_stays_bounded_and_improves_with_eps() {
    let (initial, sup) = circle_ansatz_error(0.04);
    assert!(sup <= 5.0 * initial + 0.1, "initial {initial:e}, sup {sup:e}");
    let (_, coarse) = circle_ansatz_error(0.08);
    assert!(sup < coarse, "ε = 0.04: {sup:e}, ε = 0.08: {coarse:e}");
}
