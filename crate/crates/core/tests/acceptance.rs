//! Acceptance suite. Every criterion runs in sequence inside one test so
//! that the runtime budgets are measured without interference, and each
//! prints a single PASS/FAIL line straight to stderr (bypassing the test
//! harness capture). The test fails if any criterion fails.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use mcac_core::acsolver::{prepare_initial_with, run_observed};
use mcac_core::analysis::{
    ansatz_residual, convergence_study_with, deterministic_probe, inequality_search, interpolation_ratio,
    probe_grid, AnsatzFrame, ConvergenceRow, DtRule, StudyConfig,
};
use mcac_core::frontflow::{evolve_front, radial_integrate, radial_rhs, FrontCurve, RadialState};
use mcac_core::geometry::LevelFunction;
use mcac_core::numeric::tridiag::SymTridiagonal;
use mcac_core::profile::SampledRhs;
use mcac_core::spectrum::{assemble, min_rayleigh, sweep_with, ProfileAnsatz, SweepOptions};
use mcac_core::{
    compute_theta0, compute_theta1, prepare_initial, run, signed_distance, solve_linearized, CorrectorProfile,
    DoubleWell, Error, GridSpec, Shape, SimConfig, WaveProfile,
};
use nalgebra::{DMatrix, SymmetricEigen};

/// Criterion id, runtime budget in seconds, and the check.
type Case = (usize, f64, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(checks: &[(&str, bool)], detail: String) -> Self {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
        let detail = if failed.is_empty() { detail } else { format!("{detail}; failed: {}", failed.join(", ")) };
        Self { pass: failed.is_empty(), detail }
    }
}

fn say(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn profiles() -> (WaveProfile, CorrectorProfile) {
    let p = compute_theta0(&DoubleWell::cubic(), 12.0, 4801).unwrap();
    let c = compute_theta1(&p).unwrap();
    (p, c)
}

fn orders_at_least(rows: &[ConvergenceRow], pick: impl Fn(&ConvergenceRow) -> Option<f64>, min: f64) -> bool {
    rows.iter().skip(1).all(|r| pick(r).is_some_and(|q| q >= min))
}

fn decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn criterion_1() -> Outcome {
    let (p, c) = profiles();
    let sigma_err = (p.sigma - 3.0 / 2f64.sqrt()).abs();
    let tanh_err = (0..p.grid.len)
        .map(|i| (p.theta0[i] - (p.grid.point(i) / 2f64.sqrt()).tanh()).abs())
        .fold(0.0, f64::max);
    let t1_minus = c.theta1_at(-12.0);
    let t1_plus = c.theta1_at(12.0);
    let orth = c.orthogonality(&p);
    Outcome::new(
        &[
            ("sigma", sigma_err <= 1e-6),
            ("theta0 vs tanh", tanh_err <= 1e-8),
            ("theta1 limits", (t1_minus - 0.5).abs() <= 1e-4 && (t1_plus - 0.5).abs() <= 1e-4),
            ("orthogonality", orth.abs() <= 1e-8),
        ],
        format!(
            "|σ−3/√2| = {sigma_err:.1e}, sup|θ₀−tanh| = {tanh_err:.1e}, θ₁(±12) = ({t1_minus:.6}, {t1_plus:.6}), ∫θ₀'²f''θ₁ = {orth:.1e}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let (p, _) = profiles();
    let sigma = p.sigma;
    let corrector = SampledRhs::from_fn(&p, |i, _| 1.0 - sigma * p.dtheta0[i], 1.0, 1.0);
    let second = SampledRhs::from_fn(&p, |_, rho| p.d2theta0_at(rho), 0.0, 0.0);
    let kernel = SampledRhs::from_fn(&p, |i, _| p.dtheta0[i], 0.0, 0.0);
    let accepts_corrector = solve_linearized(&p, &corrector).is_ok();
    let accepts_second = solve_linearized(&p, &second).is_ok();
    let (rejects, integral) = match solve_linearized(&p, &kernel) {
        Err(Error::Solvability { integral, .. }) => (true, integral),
        _ => (false, f64::NAN),
    };
    Outcome::new(
        &[
            ("accepts 1 − σθ₀'", accepts_corrector),
            ("accepts θ₀''", accepts_second),
            ("rejects θ₀'", rejects),
            ("reported integral", (integral - 2.0 / sigma).abs() <= 1e-6),
        ],
        format!("rejected θ₀' with ∫θ₀'² = {integral:.9} (2/σ = {:.9})", 2.0 / sigma),
    )
}

fn criterion_3() -> Outcome {
    let (p, c) = profiles();
    let eps = 0.04;
    let g = GridSpec::square(256, 1.0).unwrap();
    let lf = signed_distance(&Shape::ellipse(0.5, 0.3), &g).unwrap();
    let u0 = prepare_initial(&lf, &p, &c, eps, 1).unwrap();
    let mut cfg = SimConfig::new(eps, 0.0, g);
    cfg.t_end = 2000.0 * cfg.dt;
    cfg.record_every = 1;
    cfg.extract_fronts = false;
    let traj = run(&cfg, &u0).unwrap();
    let steps = traj.rows.len() - 1;
    let drift = traj.max_mass_drift() / g.domain_measure();
    let rise = traj.max_energy_increase();
    Outcome::new(
        &[("steps", steps == 2000), ("mean drift", drift <= 1e-12), ("energy monotone", rise <= 1e-10)],
        format!("{steps} steps, max |mean drift| = {drift:.1e}, largest energy increase = {rise:.1e}"),
    )
}

fn centroid_radii(m: &[[f64; 2]]) -> Vec<f64> {
    let n = m.len() as f64;
    let cx = m.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = m.iter().map(|p| p[1]).sum::<f64>() / n;
    m.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).collect()
}

fn criterion_4() -> Outcome {
    let sigma = 3.0 / 2f64.sqrt();
    let circle = FrontCurve::from_shape(&Shape::circle(0.7), 256).unwrap();
    let h = circle.min_spacing();
    let run_c = evolve_front(&circle, 0.2 * h * h, 1.0, 1000, sigma).unwrap();
    let circle_dev =
        centroid_radii(&run_c.final_curve.components[0]).iter().map(|r| (r - 0.7).abs()).fold(0.0, f64::max);

    let ellipse = FrontCurve::from_shape(&Shape::ellipse(1.2, 0.8), 256).unwrap();
    let h = ellipse.min_spacing();
    let run_e = evolve_front(&ellipse, 0.2 * h * h, 2.0, 100, sigma).unwrap();
    let end = &run_e.final_curve;
    let area_drift = run_e.diagnostics.max_relative_area_drift();
    let radii = centroid_radii(&end.components[0]);
    let mean_r = radii.iter().sum::<f64>() / radii.len() as f64;
    let k = &end.curvatures()[0];
    let kmean = k.iter().sum::<f64>() / k.len() as f64;
    let spread = k.iter().map(|x| (x - kmean).abs()).fold(0.0, f64::max);
    Outcome::new(
        &[
            ("circle stationary", circle_dev <= 1e-4),
            ("ellipse area", area_drift <= 1e-4),
            ("limit radius", (mean_r - 0.979796).abs() <= 1e-3),
            ("curvature spread", spread <= 1e-2),
        ],
        format!(
            "circle max |r−0.7| = {circle_dev:.1e}; ellipse area drift = {area_drift:.1e}, limit radius = {mean_r:.6}, κ spread = {spread:.1e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let sigma = 3.0 / 2f64.sqrt();
    let two = RadialState::new(2, vec![0.5, 1.0], vec![-1, 1]).unwrap();
    let rates = radial_rhs(&two);
    let rate_err = (rates[0] + 2.0).abs().max((rates[1] + 1.0).abs());
    let run_two = radial_integrate(&two, 0.2, 1e-4, sigma).unwrap();
    let area_drift = run_two.diagnostics.max_relative_area_drift();
    let collapsed = run_two.collapse.is_some();

    let mut single_dev: f64 = 0.0;
    for n in [2, 3] {
        let one = RadialState::new(n, vec![0.7], vec![-1]).unwrap();
        let r = radial_integrate(&one, 1.0, 1e-3, sigma).unwrap();
        single_dev = r.trajectory.iter().map(|s| (s.radii[0] - 0.7).abs()).fold(single_dev, f64::max);
    }
    Outcome::new(
        &[
            ("initial rates", rate_err <= 1e-9),
            ("annulus area", area_drift <= 1e-8),
            ("collapse guard reached", collapsed),
            ("single sphere", single_dev <= 1e-10),
        ],
        format!(
            "Ṙ(0) = ({:.12}, {:.12}), annulus area drift = {area_drift:.1e} until t = {:.4}, single sphere drift = {single_dev:.1e}",
            rates[0],
            rates[1],
            run_two.trajectory.last().unwrap().t
        ),
    )
}

fn fmt_rows(rows: &[ConvergenceRow]) -> String {
    rows.iter()
        .map(|r| {
            let q = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.2}"));
            format!(
                "ε={}: front {:.2e} (order {}), λ {:.2e} (order {})",
                r.eps,
                r.front_err,
                q(r.front_order),
                r.lambda_err,
                q(r.lambda_order)
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn criterion_6(circle: &[ConvergenceRow], ellipse: &[ConvergenceRow]) -> Outcome {
    let fe = |rows: &[ConvergenceRow]| rows.iter().map(|r| r.front_err).collect::<Vec<_>>();
    Outcome::new(
        &[
            ("circle monotone", decreasing(&fe(circle))),
            ("circle order ≥ 0.9", orders_at_least(circle, |r| r.front_order, 0.9)),
            ("ellipse order ≥ 0.8", orders_at_least(ellipse, |r| r.front_order, 0.8)),
        ],
        format!("circle [{}] | ellipse [{}]", fmt_rows(circle), fmt_rows(ellipse)),
    )
}

fn criterion_7(circle: &[ConvergenceRow]) -> Outcome {
    let sigma = 3.0 / 2f64.sqrt();
    let markers = FrontCurve::from_shape(&Shape::circle(0.7), 256).unwrap();
    let lambda0 = markers.diagnostics(sigma).lambda0;
    let le: Vec<f64> = circle.iter().map(|r| r.lambda_err).collect();
    Outcome::new(
        &[
            ("λ error monotone", decreasing(&le)),
            ("λ order ≥ 0.8", orders_at_least(circle, |r| r.lambda_order, 0.8)),
            ("λ₀ value", (lambda0 - 0.673435).abs() <= 1e-6),
        ],
        format!("λ₀ = {lambda0:.7}; λ errors {}", le.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")),
    )
}

fn dense(op: &SymTridiagonal) -> DMatrix<f64> {
    let n = op.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = op.diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = op.off[i];
            m[(i + 1, i)] = op.off[i];
        }
    }
    m
}

/// Smallest eigenvalue overall and on the zero-mean subspace, the latter
/// through a Householder reflection mapping the constant vector to `e₁`.
fn dense_minima(op: &SymTridiagonal) -> (f64, f64) {
    let n = op.len();
    let m = dense(op);
    let all = SymmetricEigen::new(m.clone()).eigenvalues.min();
    let mut v = DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt());
    v[(0, 0)] += 1.0;
    let vv = (v.transpose() * &v)[(0, 0)];
    let q = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    let b = q.transpose() * m * q;
    let sub = b.view((1, 1), (n - 1, n - 1)).into_owned();
    (all, SymmetricEigen::new(sub).eigenvalues.min())
}

fn criterion_8() -> Outcome {
    let eps_list = [0.1, 0.05, 0.025];
    let opts = SweepOptions::default();
    let reports = sweep_with(&eps_list, 0.0, &opts).unwrap();
    let zm: Vec<f64> = reports.iter().map(|r| r.lam_min_zero_mean).collect();
    let in_band = zm.iter().all(|v| (-1.0..=1.0).contains(v));
    let ratios: Vec<f64> = zm.windows(2).map(|w| (w[1] / w[0]).abs()).collect();
    let ratio_ok = ratios.iter().all(|&r| r <= 2.0);

    let w = DoubleWell::cubic();
    let mut control_err: f64 = 0.0;
    let mut oracle_err: f64 = 0.0;
    let mut control_zm = Vec::new();
    for (eps, rep) in eps_list.iter().zip(&reports) {
        let n = (2.0 / (opts.h_ratio * eps) - 1e-9).ceil() as usize;
        let zero = assemble(&ProfileAnsatz::constant(0.0, n, *eps).unwrap(), &w).unwrap();
        // The constant mode gives −1/ε² exactly; the zero-mean minimum sits
        // π²/4 above it (first Neumann mode on [−1, 1]).
        let all0 = min_rayleigh(&zero, false).unwrap().value;
        let zm0 = min_rayleigh(&zero, true).unwrap().value;
        control_err = control_err.max((all0 * eps * eps + 1.0).abs());
        control_zm.push(zm0);
        let (dense_all0, dense_zm0) = dense_minima(&zero);
        oracle_err = oracle_err.max((zm0 - dense_zm0).abs()).max((all0 - dense_all0).abs());
        let a = rebuild(*eps, n);
        let op = assemble(&a, &w).unwrap();
        assert_eq!(op.len(), n);
        let (all, zmin) = dense_minima(&op);
        oracle_err = oracle_err.max((rep.lam_min_all - all).abs()).max((rep.lam_min_zero_mean - zmin).abs());
    }
    let out = Outcome::new(
        &[
            ("zero-mean minima in [−1, 1]", in_band),
            ("consecutive ratios ≤ 2", ratio_ok),
            ("ψ ≡ 0 control", control_err <= 0.01),
            ("dense oracle", oracle_err <= 1e-8),
        ],
        format!(
            "h = ε/4 zero-mean minima {zm:.4?}, ratios {ratios:.2?}; ψ ≡ 0 minimum vs −1/ε² relative error {control_err:.1e}, zero-mean {control_zm:.1?}; oracle gap {oracle_err:.1e}"
        ),
    );
    // Same sweep at h = ε/8 with one Richardson step in h², which removes
    // the leading O(h²/ε⁴) grid bias of the sampled profile.
    let fine = sweep_with(&eps_list, 0.0, &SweepOptions { h_ratio: 0.125, ..SweepOptions::default() }).unwrap();
    let extrapolated: Vec<f64> =
        zm.iter().zip(&fine).map(|(c, f)| (4.0 * f.lam_min_zero_mean - c) / 3.0).collect();
    say(&format!(
        "  note 8: h = ε/8 minima {:.4?}; Richardson-extrapolated minima {extrapolated:.4?}",
        fine.iter().map(|r| r.lam_min_zero_mean).collect::<Vec<_>>()
    ));
    out
}

/// The bubble ansatz of the default sweep, rebuilt for the oracle.
fn rebuild(eps: f64, n: usize) -> ProfileAnsatz {
    let (p, c) = profiles();
    let grid = mcac_core::spectrum::cell_grid(n);
    let d: Vec<f64> = grid.points().into_iter().map(|x| x.abs() - 0.5).collect();
    mcac_core::build_psi(&p, &c, &d, grid, eps, 0.0).unwrap()
}

fn criterion_9() -> Outcome {
    let probe = deterministic_probe(1).unwrap();
    let mut stable = true;
    let mut found = Vec::new();
    for n in [1, 2] {
        let s = inequality_search(n, 1000, 7).unwrap();
        stable &= s.stable && s.c_emp.is_finite();
        found.push(format!("n={n}: {:.4} → {:.4}", s.c_emp, s.c_emp_doubled));
    }
    let mut scale_err: f64 = 0.0;
    for n in [1, 2] {
        let g = probe_grid(n).unwrap();
        let values: Vec<f64> = (0..g.len())
            .map(|k| {
                let (i, j) = (k % g.nx, k / g.nx);
                let [x, y] = g.point(i, j);
                (PI * (x + 0.5)).cos() + 0.3 * (3.0 * PI * (y + 0.5)).cos() * (2.0 * PI * (x + 0.5)).cos()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let values: Vec<f64> = values.iter().map(|v| v - mean).collect();
        let base = interpolation_ratio(&values, &g).unwrap();
        for c in [0.1, 10.0] {
            let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
            let r = interpolation_ratio(&scaled, &g).unwrap();
            scale_err = scale_err.max((r.ratio - base.ratio).abs());
        }
    }
    Outcome::new(
        &[
            ("probe ratio", (probe.ratio - 0.03041).abs() <= 1e-3),
            ("doubling stable", stable),
            ("scale invariance", scale_err <= 1e-10),
        ],
        format!("probe ratio {:.5}; search {}; scale gap {scale_err:.1e}", probe.ratio, found.join(", ")),
    )
}

fn criterion_10() -> Outcome {
    let (p, c) = profiles();
    let line = GridSpec::line(400, 1.0).unwrap();
    let flat = AnsatzFrame::from_shape(0.0, &Shape::Line { offset: 0.0 }, &line, p.sigma).unwrap();
    let flat_res = ansatz_residual(&[flat], &p, &c, 0.025, 0).unwrap().sup;

    let circle_res = |eps: f64| {
        let n = (2.0 / (0.25 * eps)).ceil() as usize;
        let g = GridSpec::square(n, 1.0).unwrap();
        let frame = AnsatzFrame::from_shape(0.0, &Shape::circle(0.7), &g, p.sigma).unwrap();
        ansatz_residual(&[frame], &p, &c, eps, 1).unwrap().sup
    };
    let (coarse, fine) = (circle_res(0.08), circle_res(0.04));
    let ratio = coarse / fine;

    // Frames along a shrinking circle: the mass correction must hold the
    // ansatz mean fixed.
    let g = GridSpec::square(100, 1.0).unwrap();
    let frames: Vec<AnsatzFrame> = (0..5)
        .map(|k| AnsatzFrame::from_shape(0.01 * k as f64, &Shape::circle(0.7 - 0.01 * k as f64), &g, p.sigma).unwrap())
        .collect();
    let drift = ansatz_residual(&frames, &p, &c, 0.04, 1).unwrap().max_mass_drift;
    Outcome::new(
        &[
            ("flat residual", flat_res <= 1e-6),
            ("circle ratio ≥ 1.7", ratio >= 1.7),
            ("ansatz mass", drift <= 1e-10),
        ],
        format!(
            "flat residual {flat_res:.1e}; circle residual {coarse:.3} (ε=0.08) / {fine:.3} (ε=0.04) = {ratio:.2}; mean drift {drift:.1e}"
        ),
    )
}

/// Lower state: a big disk and a droplet. Upper state: a smaller disk and
/// the same droplet, so the upper state dominates everywhere at t = 0. The
/// multiplier couples the two components and the order is lost.
fn criterion_11() -> Outcome {
    let (p, c) = profiles();
    let eps = 0.03;
    let g = GridSpec::square(160, 1.0).unwrap();
    let drop = Shape::Circle { center: [0.7, 0.7], radius: 0.15 };
    let level = |core: &Shape| {
        let d = (0..g.ny)
            .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
            .map(|(i, j)| {
                let x = g.point(i, j);
                core.distance(x).min(drop.distance(x))
            })
            .collect();
        LevelFunction { grid: g, d, source: None, delta: 0.04 }
    };
    let lower = prepare_initial_with(&level(&Shape::circle(0.5)), &p, &c, eps, 0, 0.0).unwrap();
    let upper = prepare_initial_with(&level(&Shape::circle(0.4)), &p, &c, eps, 0, 0.0).unwrap();
    let ordered = lower.values.iter().zip(&upper.values).all(|(a, b)| a <= b);

    let mut cfg = SimConfig::new(eps, 0.03, g);
    cfg.extract_fronts = false;
    let mut upper_states = Vec::new();
    run_observed(&cfg, &upper, |_, u| upper_states.push(u.values.clone())).unwrap();
    let mut violated = None;
    run_observed(&cfg, &lower, |k, u| {
        if violated.is_none() {
            let (at, worst) = u
                .values
                .iter()
                .zip(&upper_states[k - 1])
                .map(|(a, b)| a - b)
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
            if worst > 1e-3 {
                violated = Some((k, at, worst));
            }
        }
    })
    .unwrap();
    let detail = match violated {
        Some((k, at, worst)) => {
            let [x, y] = g.point(at % g.nx, at / g.nx);
            format!("ordered at t = 0; u_lower − u_upper = {worst:.3} at ({x:.3}, {y:.3}), step {k}")
        }
        None => "ordering never violated".to_string(),
    };
    Outcome::new(&[("ordered initially", ordered), ("ordering violated", violated.is_some())], detail)
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<(usize, bool)> = Vec::new();
    let mut record = |id: usize, budget: f64, start: Instant, out: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let pass = out.pass && secs <= budget;
        let detail = if secs <= budget { out.detail } else { format!("{}; over the {budget} s budget", out.detail) };
        say(&format!(
            "criterion {id:>2} {} ({secs:.1} s, budget {budget} s): {detail}",
            if pass { "PASS" } else { "FAIL" }
        ));
        results.push((id, pass));
    };

    let cases: [Case; 5] =
        [(1, 5.0, criterion_1), (2, 5.0, criterion_2), (3, 180.0, criterion_3), (4, 120.0, criterion_4), (5, 10.0, criterion_5)];
    for (id, budget, f) in cases {
        let start = Instant::now();
        record(id, budget, start, f());
    }

    // Criteria 6 and 7 share the same runs: stationary circle and ellipse,
    // h = ε/2. The ellipse uses dt = 1.25 ε³ (equal to 0.1 ε² at ε = 0.08)
    // so that the splitting error of the interface velocity shrinks with ε.
    let start = Instant::now();
    let circle = convergence_study_with(&StudyConfig::new(Shape::circle(0.7), vec![0.08, 0.04, 0.02], 0.2, 1))
        .unwrap()
        .0;
    let mut ell = StudyConfig::new(Shape::ellipse(1.2, 0.8), vec![0.08, 0.04, 0.02], 0.1, 1);
    ell.dt_rule = DtRule::Cubic(1.25);
    let ellipse = convergence_study_with(&ell).unwrap().0;
    let out6 = criterion_6(&circle, &ellipse);
    let out7 = criterion_7(&circle);
    record(6, 600.0, start, out6);
    record(7, 600.0, start, out7);

    let cases: [Case; 4] =
        [(8, 120.0, criterion_8), (9, 60.0, criterion_9), (10, 180.0, criterion_10), (11, 60.0, criterion_11)];
    for (id, budget, f) in cases {
        let start = Instant::now();
        record(id, budget, start, f());
    }

    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    say(&format!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len()));
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
