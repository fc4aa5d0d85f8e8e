use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mcac_core::analysis::{hausdorff, interpolation_ratio, probe_grid};
use mcac_core::frontflow::{step_front, FrontCurve};
use mcac_core::spectrum::{assemble, min_rayleigh, sweep};
use mcac_core::{
    compute_theta0, compute_theta1, prepare_initial, signed_distance, zero_level, DoubleWell, GridSpec,
    LinearSolver, Shape, SimConfig, Stepper,
};

fn profile(c: &mut Criterion) {
    let w = DoubleWell::cubic();
    c.bench_function("theta0_4801", |b| b.iter(|| compute_theta0(black_box(&w), 12.0, 4801).unwrap()));
    let p = compute_theta0(&w, 12.0, 4801).unwrap();
    c.bench_function("theta1_4801", |b| b.iter(|| compute_theta1(black_box(&p)).unwrap()));
}

fn imex_step(c: &mut Criterion) {
    let w = DoubleWell::cubic();
    let p = compute_theta0(&w, 12.0, 4801).unwrap();
    let th1 = compute_theta1(&p).unwrap();
    let eps = 0.04;
    let g = GridSpec::square(128, 1.0).unwrap();
    let lf = signed_distance(&Shape::circle(0.7), &g).unwrap();
    let u = prepare_initial(&lf, &p, &th1, eps, 1).unwrap();
    let mut group = c.benchmark_group("imex_step_128");
    for (name, solver) in [("dct", LinearSolver::Dct), ("cg", LinearSolver::ConjugateGradient)] {
        let mut cfg = SimConfig::new(eps, 0.1, g);
        cfg.solver = solver;
        let stepper = Stepper::new(&cfg).unwrap();
        group.bench_function(name, |b| b.iter(|| stepper.step(black_box(&u)).unwrap()));
    }
    group.finish();
    c.bench_function("zero_level_128", |b| b.iter(|| zero_level(black_box(&u)).unwrap()));
}

fn fronts(c: &mut Criterion) {
    let curve = FrontCurve::from_shape(&Shape::ellipse(1.2, 0.8), 256).unwrap();
    let h = curve.min_spacing();
    c.bench_function("front_step_256", |b| b.iter(|| step_front(black_box(&curve), 0.2 * h * h).unwrap()));
    let a = &curve.polylines()[0];
    let other = FrontCurve::from_shape(&Shape::circle(1.0), 256).unwrap();
    let bl = &other.polylines()[0];
    c.bench_function("hausdorff_256", |b| b.iter(|| hausdorff(black_box(a), black_box(bl)).unwrap()));
}

fn spectra(c: &mut Criterion) {
    c.bench_function("spectrum_sweep_3eps", |b| b.iter(|| sweep(black_box(&[0.1, 0.05, 0.025]), 0.0).unwrap()));
    let a = mcac_core::spectrum::ProfileAnsatz::constant(1.0, 2000, 0.05).unwrap();
    let op = assemble(&a, &DoubleWell::cubic()).unwrap();
    c.bench_function("min_rayleigh_zero_mean_2000", |b| b.iter(|| min_rayleigh(black_box(&op), true).unwrap()));
}

fn inequality(c: &mut Criterion) {
    let g = probe_grid(2).unwrap();
    let values: Vec<f64> = (0..g.len())
        .map(|k| {
            let [x, y] = g.point(k % g.nx, k / g.nx);
            (std::f64::consts::PI * (x + 0.5)).cos() * (2.0 * std::f64::consts::PI * (y + 0.5)).cos()
        })
        .collect();
    c.bench_function("interpolation_ratio_96sq", |b| b.iter(|| interpolation_ratio(black_box(&values), &g).unwrap()));
}

criterion_group!(benches, profile, imex_step, fronts, spectra, inequality);
criterion_main!(benches);
