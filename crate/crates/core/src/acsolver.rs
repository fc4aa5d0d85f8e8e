//! Mass-conserving IMEX solver for
//!
//! ```text
//! u_t = Δu + ε⁻² (f(u) − ⨍ f(u)),   ∂_ν u = 0,
//! ```
//!
//! on cell-centred grids with mirrored ghost cells. Diffusion is implicit,
//! the reaction and the multiplier are explicit:
//!
//! ```text
//! (I − dt Δ_h) uⁿ⁺¹ = uⁿ + dt ε⁻² (f(uⁿ) − ⨍ f(uⁿ)).
//! ```
//!
//! The right-hand side reaction has zero sum and `Δ_h` has zero column sums,
//! so the discrete mass is conserved to round-off.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, LevelFunction, Point, Polyline};
use crate::numeric::{pairwise_dot, pairwise_mean, pairwise_sum, smoothstep};
use crate::potential::DoubleWell;
use crate::profile::{CorrectorProfile, WaveProfile};

/// Discrete `u^ε` at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub eps: f64,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, eps: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} values for a grid of {} cells", values.len(), grid.len())));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("ε must be positive, got {eps}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at cell {i}")));
        }
        Ok(Self { grid, values, eps })
    }

    pub fn constant(grid: GridSpec, value: f64, eps: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()], eps)
    }

    pub fn from_fn(grid: GridSpec, eps: f64, f: impl Fn(Point) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.point(i, j)));
            }
        }
        Self::new(grid, values, eps)
    }

    pub fn dims(&self) -> usize {
        self.grid.dim()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn mean(&self) -> f64 {
        pairwise_mean(&self.values)
    }

    /// `∫u ≈ Σ u h^d`.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    /// `E_h = Σ_faces (ε/2)|D u|² h^d + Σ F(u) h^d / ε`.
    pub fn energy(&self, well: &DoubleWell) -> f64 {
        let g = &self.grid;
        let eps = self.eps;
        let vol = g.cell_volume();
        let (nx, ny) = (g.nx, g.ny);
        let wx = vol / (g.hx() * g.hx());
        let mut faces: Vec<f64> = Vec::with_capacity(2 * g.len());
        for j in 0..ny {
            for i in 0..nx - 1 {
                let d = self.at(i + 1, j) - self.at(i, j);
                faces.push(wx * d * d);
            }
        }
        if g.dim() == 2 {
            let wy = vol / (g.hy() * g.hy());
            for j in 0..ny - 1 {
                for i in 0..nx {
                    let d = self.at(i, j + 1) - self.at(i, j);
                    faces.push(wy * d * d);
                }
            }
        }
        let potential: Vec<f64> = self.values.iter().map(|&u| well.potential(u)).collect();
        0.5 * eps * pairwise_sum(&faces) + pairwise_sum(&potential) * vol / eps
    }

    /// Largest `|a − b|` over cells.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Five-point (three-point in 1D) Neumann Laplacian with mirrored ghosts.
pub fn laplacian(u: &ScalarField) -> Vec<f64> {
    let mut out = vec![0.0; u.values.len()];
    apply_laplacian(&u.grid, &u.values, &mut out);
    out
}

fn apply_laplacian(g: &GridSpec, x: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let ax = 1.0 / (g.hx() * g.hx());
    let ay = if g.dim() == 2 { 1.0 / (g.hy() * g.hy()) } else { 0.0 };
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let c = x[j * nx + i];
            let mut s = 0.0;
            if i > 0 {
                s += ax * (x[j * nx + i - 1] - c);
            }
            if i + 1 < nx {
                s += ax * (x[j * nx + i + 1] - c);
            }
            if j > 0 {
                s += ay * (x[(j - 1) * nx + i] - c);
            }
            if j + 1 < ny {
                s += ay * (x[(j + 1) * nx + i] - c);
            }
            *o = s;
        }
    });
}

/// `λ_ε = (1/ε) ⨍ f(u)`.
pub fn lambda_of(u: &ScalarField, well: &DoubleWell) -> f64 {
    let f: Vec<f64> = u.values.iter().map(|&v| well.f(v)).collect();
    pairwise_mean(&f) / u.eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Diagonalise `Δ_h` by the type-II discrete cosine transform.
    #[default]
    Dct,
    /// Conjugate gradients started from the right-hand side.
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub grid: GridSpec,
    pub well: DoubleWell,
    pub record_every: usize,
    pub solver: LinearSolver,
    /// Relative residual target for conjugate gradients.
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
    /// Keep a copy of the field at every record.
    pub keep_fields: bool,
    /// Extract the zero level at every record (2D only).
    pub extract_fronts: bool,
}

impl SimConfig {
    /// Cubic well, `dt = 0.1 ε²`, DCT solves, a record every 10 steps.
    pub fn new(eps: f64, t_end: f64, grid: GridSpec) -> Self {
        Self {
            eps,
            dt: 0.1 * eps * eps,
            t_end,
            grid,
            well: DoubleWell::cubic(),
            record_every: 10,
            solver: LinearSolver::Dct,
            cg_tolerance: 1e-12,
            cg_max_iterations: 10_000,
            keep_fields: false,
            extract_fronts: grid.dim() == 2,
        }
    }

    /// `0.25 ε² · 2 / max_{[−1.2, 1.2]} |f'|`.
    pub fn reaction_dt_limit(&self) -> f64 {
        0.5 * self.eps * self.eps / self.well.max_abs_df(-1.2, 1.2)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidInput(format!("ε must be positive, got {}", self.eps)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("final time must be ≥ 0, got {}", self.t_end)));
        }
        let limit = self.reaction_dt_limit();
        if !(self.dt > 0.0) || self.dt > limit {
            return Err(Error::InvalidInput(format!("dt = {} outside (0, {limit}] required by the reaction term", self.dt)));
        }
        let h = self.grid.hx().max(if self.grid.dim() == 2 { self.grid.hy() } else { 0.0 });
        if h > 0.5 * self.eps * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("grid spacing {h} does not resolve ε = {} (need h ≤ ε/2)", self.eps)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the uniform step that lands exactly on `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

/// Prepared IMEX stepper for a fixed grid and step size.
pub struct Stepper {
    cfg: SimConfig,
    dt: f64,
    dct_x: Option<Arc<dyn TransformType2And3<f64>>>,
    dct_y: Option<Arc<dyn TransformType2And3<f64>>>,
    /// `1 + dt μ_k` for every cosine mode.
    denominators: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        Self::with_dt(cfg, cfg.dt)
    }

    pub fn with_dt(cfg: &SimConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        if !(dt > 0.0) || dt > cfg.dt * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("step {dt} exceeds the configured dt {}", cfg.dt)));
        }
        let g = cfg.grid;
        let mut stepper = Self { cfg: cfg.clone(), dt, dct_x: None, dct_y: None, denominators: Vec::new() };
        if cfg.solver == LinearSolver::Dct {
            let mut planner = DctPlanner::new();
            stepper.dct_x = Some(planner.plan_dct2(g.nx));
            let mu = |n: usize, h: f64, k: usize| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                4.0 / (h * h) * s * s
            };
            let mux: Vec<f64> = (0..g.nx).map(|k| mu(g.nx, g.hx(), k)).collect();
            let muy: Vec<f64> = if g.dim() == 2 {
                stepper.dct_y = Some(planner.plan_dct2(g.ny));
                (0..g.ny).map(|k| mu(g.ny, g.hy(), k)).collect()
            } else {
                vec![0.0]
            };
            stepper.denominators = muy.iter().flat_map(|my| mux.iter().map(move |mx| 1.0 + dt * (mx + my))).collect();
        }
        Ok(stepper)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn step(&self, u: &ScalarField) -> Result<ScalarField> {
        if u.grid != self.cfg.grid {
            return Err(Error::ShapeMismatch("field grid differs from the configured grid".into()));
        }
        if (u.eps - self.cfg.eps).abs() > 1e-15 * self.cfg.eps {
            return Err(Error::InvalidInput(format!("field ε = {} but configured ε = {}", u.eps, self.cfg.eps)));
        }
        // Constant states are exact fixed points of the scheme.
        if u.values.iter().all(|&v| v == u.values[0]) {
            return Ok(u.clone());
        }
        let well = &self.cfg.well;
        let f: Vec<f64> = u.values.par_iter().map(|&v| well.f(v)).collect();
        let mean = pairwise_mean(&f);
        let scale = self.dt / (self.cfg.eps * self.cfg.eps);
        let rhs: Vec<f64> = u.values.par_iter().zip(f.par_iter()).map(|(v, fv)| v + scale * (fv - mean)).collect();
        let values = match self.cfg.solver {
            LinearSolver::Dct => self.solve_dct(rhs),
            LinearSolver::ConjugateGradient => self.solve_cg(&rhs)?,
        };
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at cell {i} after step")));
        }
        Ok(ScalarField { grid: u.grid, values, eps: u.eps })
    }

    fn solve_dct(&self, mut data: Vec<f64>) -> Vec<f64> {
        let g = self.cfg.grid;
        let (nx, ny) = (g.nx, g.ny);
        let dx = self.dct_x.as_ref().expect("planned");
        transform_rows(dx, &mut data, nx, true);
        if let Some(dy) = &self.dct_y {
            let mut t = transpose(&data, nx, ny);
            transform_rows(dy, &mut t, ny, true);
            t.par_iter_mut().zip(transpose(&self.denominators, nx, ny).par_iter()).for_each(|(v, d)| *v /= d);
            transform_rows(dy, &mut t, ny, false);
            data = transpose(&t, ny, nx);
        } else {
            data.par_iter_mut().zip(self.denominators.par_iter()).for_each(|(v, d)| *v /= d);
        }
        transform_rows(dx, &mut data, nx, false);
        // DCT-III ∘ DCT-II = (n/2)·I per axis.
        let scale = if g.dim() == 2 { 4.0 / (nx * ny) as f64 } else { 2.0 / nx as f64 };
        data.par_iter_mut().for_each(|v| *v *= scale);
        data
    }

    fn solve_cg(&self, b: &[f64]) -> Result<Vec<f64>> {
        let g = self.cfg.grid;
        let dt = self.dt;
        let apply = |x: &[f64], out: &mut Vec<f64>| {
            apply_laplacian(&g, x, out);
            out.par_iter_mut().zip(x.par_iter()).for_each(|(o, xi)| *o = xi - dt * *o);
        };
        let n = b.len();
        let mut x = b.to_vec();
        let mut ap = vec![0.0; n];
        apply(&x, &mut ap);
        let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, a)| bi - a).collect();
        let mut p = r.clone();
        let bnorm = pairwise_dot(b, b).sqrt().max(f64::MIN_POSITIVE);
        let mut rr = pairwise_dot(&r, &r);
        let tol = self.cfg.cg_tolerance * bnorm;
        for it in 0..self.cfg.cg_max_iterations {
            if rr.sqrt() <= tol {
                return Ok(x);
            }
            apply(&p, &mut ap);
            let alpha = rr / pairwise_dot(&p, &ap);
            x.par_iter_mut().zip(p.par_iter()).for_each(|(xi, pi)| *xi += alpha * pi);
            r.par_iter_mut().zip(ap.par_iter()).for_each(|(ri, ai)| *ri -= alpha * ai);
            let rr_new = pairwise_dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            p.par_iter_mut().zip(r.par_iter()).for_each(|(pi, ri)| *pi = ri + beta * *pi);
            if it + 1 == self.cfg.cg_max_iterations && rr.sqrt() > tol {
                break;
            }
        }
        if rr.sqrt() <= tol {
            return Ok(x);
        }
        Err(Error::Solve { iterations: self.cfg.cg_max_iterations, residual: rr.sqrt() / bnorm })
    }
}

fn transform_rows(plan: &Arc<dyn TransformType2And3<f64>>, data: &mut [f64], len: usize, forward: bool) {
    let scratch_len = plan.get_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![0.0; scratch_len],
        |scratch, row| {
            if forward {
                plan.process_dct2_with_scratch(row, scratch);
            } else {
                plan.process_dct3_with_scratch(row, scratch);
            }
        },
    );
}

fn transpose(src: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(ny).enumerate().for_each(|(i, col)| {
        for (j, v) in col.iter_mut().enumerate() {
            *v = src[j * nx + i];
        }
    });
    out
}

/// One IMEX step with the configured `dt`.
pub fn step(u: &ScalarField, cfg: &SimConfig) -> Result<ScalarField> {
    Stepper::new(cfg)?.step(u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    /// Zero-level polylines at each record (empty when there is no zero).
    pub fronts: Vec<(f64, Vec<Polyline>)>,
    /// Fields at each record when requested.
    pub fields: Vec<(f64, ScalarField)>,
    pub final_field: ScalarField,
    pub dt: f64,
}

impl Trajectory {
    pub fn max_mass_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else { return 0.0 };
        self.rows.iter().map(|r| (r.mass - first.mass).abs()).fold(0.0, f64::max)
    }

    /// Largest energy increase between consecutive records.
    pub fn max_energy_increase(&self) -> f64 {
        self.rows.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Steps `u0` to `cfg.t_end`, recording every `cfg.record_every` steps and
/// at the end.
pub fn run(cfg: &SimConfig, u0: &ScalarField) -> Result<Trajectory> {
    run_observed(cfg, u0, |_, _| {})
}

/// As [`run`], also calling `observe(step_index, field)` after every step.
pub fn run_observed(cfg: &SimConfig, u0: &ScalarField, mut observe: impl FnMut(usize, &ScalarField)) -> Result<Trajectory> {
    cfg.validate()?;
    let (steps, dt) = cfg.schedule();
    let stepper = Stepper::with_dt(cfg, dt)?;
    let mut traj = Trajectory { rows: Vec::new(), fronts: Vec::new(), fields: Vec::new(), final_field: u0.clone(), dt };
    let record = |traj: &mut Trajectory, t: f64, u: &ScalarField| -> Result<()> {
        traj.rows.push(TrajectoryRow { t, mass: u.mass(), energy: u.energy(&cfg.well), lambda: lambda_of(u, &cfg.well) });
        if cfg.extract_fronts && u.dims() == 2 {
            let lines = match zero_level(u) {
                Ok(lines) => lines,
                Err(Error::EmptyContour) => Vec::new(),
                Err(e) => return Err(e),
            };
            traj.fronts.push((t, lines));
        }
        if cfg.keep_fields {
            traj.fields.push((t, u.clone()));
        }
        Ok(())
    };
    let mut u = u0.clone();
    record(&mut traj, 0.0, &u)?;
    for k in 1..=steps {
        u = stepper.step(&u)?;
        observe(k, &u);
        if k % cfg.record_every == 0 || k == steps {
            let t = if k == steps { cfg.t_end } else { k as f64 * dt };
            record(&mut traj, t, &u)?;
        }
    }
    traj.final_field = u;
    Ok(traj)
}

/// Well-prepared initial data around the front of `lf`.
///
/// Order 0: `ζθ₀(d/ε) + (1−ζ)(±1)`. Order 1 adds the first corrections,
/// `−ελ₀θ₁(d/ε)` inside the tube and `ελ₀/f'(±1)` outside, with
/// `λ₀ = K̄/σ` taken from the analytic front. The cutoff `ζ(d)` is 1 on
/// `|d| ≤ δ`, 0 beyond `2δ`, and a quintic smoothstep between.
pub fn prepare_initial(
    lf: &LevelFunction,
    p: &WaveProfile,
    c: &CorrectorProfile,
    eps: f64,
    order: u8,
) -> Result<ScalarField> {
    let lambda0 = match (&lf.source, order) {
        (_, 0) => 0.0,
        (Some(shape), _) => shape.mean_curvature(lf.grid.dim()) / p.sigma,
        (None, _) => {
            return Err(Error::InvalidInput("order-1 data needs an analytic front to evaluate λ₀".into()));
        }
    };
    prepare_initial_with(lf, p, c, eps, order, lambda0)
}

/// [`prepare_initial`] with an explicit `λ₀`.
pub fn prepare_initial_with(
    lf: &LevelFunction,
    p: &WaveProfile,
    c: &CorrectorProfile,
    eps: f64,
    order: u8,
    lambda0: f64,
) -> Result<ScalarField> {
    if order > 1 {
        return Err(Error::InvalidInput(format!("order must be 0 or 1, got {order}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("ε must be positive, got {eps}")));
    }
    let h = lf.grid.hx().max(if lf.grid.dim() == 2 { lf.grid.hy() } else { 0.0 });
    if h > 0.5 * eps * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("grid spacing {h} does not resolve ε = {eps}")));
    }
    let well = p.well();
    let delta = lf.delta;
    let outer = |sign: f64| sign + if order == 1 { eps * lambda0 / well.df(sign) } else { 0.0 };
    let (minus, plus) = (outer(-1.0), outer(1.0));
    let values = lf
        .d
        .iter()
        .map(|&d| {
            let zeta = 1.0 - smoothstep((d.abs() - delta) / delta);
            let far = if d < 0.0 { minus } else { plus };
            if zeta == 0.0 {
                return far;
            }
            let rho = d / eps;
            let mut inner = p.theta0_at(rho);
            if order == 1 {
                inner -= eps * lambda0 * c.theta1_at(rho);
            }
            zeta * inner + (1.0 - zeta) * far
        })
        .collect();
    ScalarField::new(lf.grid, values, eps)
}

/// Marching-squares extraction of `{u = 0}` over the cell-centre lattice.
///
/// Every polyline keeps `u < 0` on its left, so closed loops around a
/// negative region run counterclockwise. Ambiguous saddle cells are
/// resolved by the average of the four corners.
pub fn zero_level(u: &ScalarField) -> Result<Vec<Polyline>> {
    if u.dims() != 2 {
        return Err(Error::InvalidInput("zero_level needs a 2D field".into()));
    }
    let g = &u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let neg = |i: usize, j: usize| u.at(i, j) < 0.0;
    // Edge keys: (0, i, j) joins (i,j)-(i+1,j); (1, i, j) joins (i,j)-(i,j+1).
    type Key = (u8, usize, usize);
    let crossing = |key: Key| -> Point {
        let (a, b) = match key {
            (0, i, j) => ((i, j), (i + 1, j)),
            (_, i, j) => ((i, j), (i, j + 1)),
        };
        let (ua, ub) = (u.at(a.0, a.1), u.at(b.0, b.1));
        let t = ua / (ua - ub);
        let (pa, pb) = (g.point(a.0, a.1), g.point(b.0, b.1));
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };
    let mut next: HashMap<Key, Key> = HashMap::new();
    let mut order: Vec<Key> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // Corners counterclockwise and the edges leaving each corner.
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let edges: [Key; 4] = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let sign: Vec<bool> = corners.iter().map(|&(a, b)| neg(a, b)).collect();
            // Crossings in counterclockwise order: (edge, enters positive?).
            let mut cross: Vec<(Key, bool)> = Vec::with_capacity(4);
            for e in 0..4 {
                if sign[e] != sign[(e + 1) % 4] {
                    cross.push((edges[e], sign[e]));
                }
            }
            match cross.len() {
                0 => {}
                2 => {
                    let (start, end) = if cross[0].1 { (cross[0].0, cross[1].0) } else { (cross[1].0, cross[0].0) };
                    next.insert(start, end);
                    order.push(start);
                }
                _ => {
                    let centre = 0.25 * corners.iter().map(|&(a, b)| u.at(a, b)).sum::<f64>();
                    for k in 0..4 {
                        if cross[k].1 {
                            let partner = if centre < 0.0 { (k + 1) % 4 } else { (k + 3) % 4 };
                            next.insert(cross[k].0, cross[partner].0);
                            order.push(cross[k].0);
                        }
                    }
                }
            }
        }
    }
    if next.is_empty() {
        return Err(Error::EmptyContour);
    }
    let ends: std::collections::HashSet<Key> = next.values().copied().collect();
    let mut used: std::collections::HashSet<Key> = std::collections::HashSet::new();
    let mut lines = Vec::new();
    // Open chains start at keys that are never an end.
    let heads: Vec<Key> = order.iter().copied().filter(|k| !ends.contains(k)).collect();
    for head in heads.into_iter().chain(order.iter().copied()) {
        if used.contains(&head) {
            continue;
        }
        let mut pts = vec![crossing(head)];
        used.insert(head);
        let mut cur = head;
        let mut closed = false;
        while let Some(&nk) = next.get(&cur) {
            if nk == head {
                closed = true;
                break;
            }
            pts.push(crossing(nk));
            if !used.insert(nk) {
                break;
            }
            cur = nk;
        }
        lines.push(Polyline { points: pts, closed });
    }
    Ok(lines)
}
