//! Verification tools: the interpolation inequality probe, Hausdorff
//! distances between fronts, residuals of the asymptotic ansatz, and
//! ε-convergence studies of the phase field against the marker flow.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::acsolver::{lambda_of, prepare_initial, run, ScalarField, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::frontflow::{evolve_front_until, FrontCurve};
use crate::geometry::{closest_on_segment, dist, signed_distance, GridSpec, LevelFunction, Point, Polyline, Shape};
use crate::numeric::{pairwise_mean, pairwise_sum, smoothstep, smoothstep_d1, smoothstep_d2};
use crate::potential::DoubleWell;
use crate::profile::{compute_theta0, compute_theta1, CorrectorProfile, WaveProfile, DEFAULT_POINTS, DEFAULT_RHO_MAX};

/// Zero-mean tolerance for probe fields.
pub const MEAN_TOL: f64 = 1e-12;
/// Highest trigonometric degree in the random ensemble.
pub const MAX_DEGREE: usize = 20;
/// Minimum number of random trials.
pub const MIN_TRIALS: usize = 100;

/// One evaluation of `‖R‖_{2+p}^{2+p} / (‖R‖₂^p ‖∇R‖₂²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityProbe {
    pub n: usize,
    pub p: f64,
    pub ratio: f64,
    pub witness: String,
}

/// The exponent `min{4/n, 1}`.
pub fn exponent(n: usize) -> f64 {
    (4.0 / n as f64).min(1.0)
}

/// Squared central-difference gradient. Mirrored ghost cells leave
/// `(u₁ − u₀)/(2h)` in the end cells.
fn gradient_sq(values: &[f64], grid: &GridSpec) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let at = |a: usize, b: usize| values[grid.index(a, b)];
    let mut out = Vec::with_capacity(values.len());
    for j in 0..ny {
        for i in 0..nx {
            let gx = (at((i + 1).min(nx - 1), j) - at(i.saturating_sub(1), j)) / (2.0 * grid.hx());
            let mut g2 = gx * gx;
            if grid.dim() == 2 {
                let gy = (at(i, (j + 1).min(ny - 1)) - at(i, j.saturating_sub(1))) / (2.0 * grid.hy());
                g2 += gy * gy;
            }
            out.push(g2);
        }
    }
    out
}

/// Grid-quadrature ratio for a sampled zero-mean field.
pub fn interpolation_ratio(values: &[f64], grid: &GridSpec) -> Result<InequalityProbe> {
    interpolation_ratio_labeled(values, grid, "sampled field")
}

fn interpolation_ratio_labeled(values: &[f64], grid: &GridSpec, witness: &str) -> Result<InequalityProbe> {
    grid.validate()?;
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!("{} samples for a grid of {}", values.len(), grid.len())));
    }
    if values.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("field is identically zero".into()));
    }
    let mean = pairwise_mean(values);
    if mean.abs() > MEAN_TOL {
        return Err(Error::InvalidInput(format!("field mean {mean:e} is not zero")));
    }
    let n = grid.dim();
    let p = exponent(n);
    let vol = grid.cell_volume();
    let high: Vec<f64> = values.iter().map(|v| v.abs().powf(2.0 + p)).collect();
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let grad = gradient_sq(values, grid);
    let num = pairwise_sum(&high) * vol;
    let l2 = (pairwise_sum(&sq) * vol).sqrt();
    let g2 = pairwise_sum(&grad) * vol;
    if g2 == 0.0 {
        return Err(Error::Degenerate("field has zero discrete gradient".into()));
    }
    Ok(InequalityProbe { n, p, ratio: num / (l2.powf(p) * g2), witness: witness.to_string() })
}

/// Grid used by the probe and the random search on the unit interval or square.
pub fn probe_grid(n: usize) -> Result<GridSpec> {
    match n {
        1 => GridSpec::line(512, 0.5),
        2 => GridSpec::square(96, 0.5),
        _ => Err(Error::InvalidInput(format!("dimension must be 1 or 2, got {n}"))),
    }
}

/// `cos(2πx)` on (0,1), or `cos(2πx)cos(2πy)` on the unit square.
pub fn deterministic_probe(n: usize) -> Result<InequalityProbe> {
    let grid = probe_grid(n)?;
    let tables = cosine_tables(&grid, 2);
    let values = separable(&grid, &tables, |j, k| if j == 2 && (n == 1 || k == 2) { 1.0 } else { 0.0 }, 2);
    let label = if n == 1 { "cos(2πx)" } else { "cos(2πx)cos(2πy)" };
    interpolation_ratio_labeled(&values, &grid, label)
}

/// `cos(πk(x+½))` per axis for `k ≤ degree`, so the modes are Neumann
/// eigenfunctions of the unit cell.
fn cosine_tables(grid: &GridSpec, degree: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let table = |len: usize, coord: &dyn Fn(usize) -> f64| {
        (0..=degree)
            .map(|k| (0..len).map(|i| (std::f64::consts::PI * k as f64 * (coord(i) + 0.5)).cos()).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let tx = table(grid.nx, &|i| grid.x(i));
    let ty = if grid.dim() == 2 { table(grid.ny, &|j| grid.y(j)) } else { vec![vec![1.0]; degree + 1] };
    (tx, ty)
}

fn separable(
    grid: &GridSpec,
    tables: &(Vec<Vec<f64>>, Vec<Vec<f64>>),
    coef: impl Fn(usize, usize) -> f64,
    degree: usize,
) -> Vec<f64> {
    let (tx, ty) = tables;
    let ky_max = if grid.dim() == 2 { degree } else { 0 };
    // Contract over x-modes first: rows[k][i] = Σ_j a_jk cos_j(x_i).
    let rows: Vec<Vec<f64>> = (0..=ky_max)
        .map(|k| {
            let mut row = vec![0.0; grid.nx];
            for (j, tj) in tx.iter().enumerate().take(degree + 1) {
                let a = coef(j, k);
                if a != 0.0 {
                    row.iter_mut().zip(tj).for_each(|(r, c)| *r += a * c);
                }
            }
            row
        })
        .collect();
    let mut values = vec![0.0; grid.len()];
    for jy in 0..grid.ny {
        for (k, row) in rows.iter().enumerate() {
            let w = if grid.dim() == 2 { ty[k][jy] } else { 1.0 };
            for i in 0..grid.nx {
                values[grid.index(i, jy)] += w * row[i];
            }
        }
    }
    values
}

/// Result of a randomized search for the inequality constant.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySearch {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest ratio over the first `trials` fields.
    pub c_emp: f64,
    /// Largest ratio over `2·trials` fields from the same stream.
    pub c_emp_doubled: f64,
    /// Whether doubling raised the maximum by at most 50%.
    pub stable: bool,
    pub witness: String,
}

fn random_trial(grid: &GridSpec, tables: &(Vec<Vec<f64>>, Vec<Vec<f64>>), seed: u64, trial: usize) -> (Vec<f64>, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let degree = rng.random_range(1..=MAX_DEGREE);
    let two_d = grid.dim() == 2;
    let side = degree + 1;
    let coefs: Vec<f64> = (0..side * if two_d { side } else { 1 })
        .map(|idx| if idx == 0 { 0.0 } else { rng.random_range(-1.0..=1.0) })
        .collect();
    let values = separable(grid, tables, |j, k| if j > degree || k > degree { 0.0 } else { coefs[k * side + j] }, MAX_DEGREE);
    let mean = pairwise_mean(&values);
    (values.into_iter().map(|v| v - mean).collect(), format!("trial {trial}, degree {degree}"))
}

/// Maximum ratio over random zero-mean cosine polynomials of degree at most
/// [`MAX_DEGREE`], plus the deterministic probe. Each trial draws from its
/// own ChaCha8 stream, so results do not depend on the thread count and the
/// doubled run extends the first.
pub fn inequality_search(n: usize, trials: usize, seed: u64) -> Result<InequalitySearch> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidInput(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let grid = probe_grid(n)?;
    let tables = cosine_tables(&grid, MAX_DEGREE);
    let probe = deterministic_probe(n)?;
    let ratios: Vec<(f64, String)> = (1..2 * trials)
        .into_par_iter()
        .map(|trial| {
            let (values, label) = random_trial(&grid, &tables, seed, trial);
            let ratio = interpolation_ratio_labeled(&values, &grid, &label).map(|p| p.ratio).unwrap_or(0.0);
            (ratio, label)
        })
        .collect();
    let best = |upto: usize| {
        std::iter::once((probe.ratio, probe.witness.clone()))
            .chain(ratios[..upto - 1].iter().cloned())
            .fold((0.0, String::new()), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    let (c_emp, witness) = best(trials);
    let (c_emp_doubled, _) = best(2 * trials);
    Ok(InequalitySearch { n, trials, seed, c_emp, c_emp_doubled, stable: c_emp_doubled <= 1.5 * c_emp, witness })
}

/// Largest distance from a point of one set to the other. The search runs a
/// branch and bound along each segment: every point-to-segment distance is
/// convex along a segment, so `min_j max(ψ_j(t₀), ψ_j(t₁))` bounds the
/// distance over `[t₀, t₁]` from above. Results are lower bounds within
/// `HAUSDORFF_TOL` of the exact value.
fn directed(a: &[Polyline], b: &[(Point, Point)]) -> f64 {
    let to_b = |p: Point| -> Vec<f64> { b.iter().map(|&(s, e)| dist(p, closest_on_segment(p, s, e))).collect() };
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let mut best: f64 = 0.0;
    for line in a {
        for &p in &line.points {
            best = best.max(min(&to_b(p)));
        }
    }
    for line in a {
        for (s, e) in line.segments() {
            let at = |t: f64| [s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])];
            let mut stack = vec![(0.0, 1.0, to_b(s), to_b(e))];
            while let Some((t0, t1, v0, v1)) = stack.pop() {
                let upper = v0.iter().zip(&v1).map(|(x, y)| x.max(*y)).fold(f64::INFINITY, f64::min);
                if upper <= best + HAUSDORFF_TOL || t1 - t0 < 1e-15 {
                    continue;
                }
                let tm = 0.5 * (t0 + t1);
                let vm = to_b(at(tm));
                best = best.max(min(&vm));
                stack.push((t0, tm, v0, vm.clone()));
                stack.push((tm, t1, vm, v1));
            }
        }
    }
    best
}

/// Absolute resolution of [`hausdorff`].
pub const HAUSDORFF_TOL: f64 = 1e-13;

/// Symmetric Hausdorff distance between two polylines.
pub fn hausdorff(a: &Polyline, b: &Polyline) -> Result<f64> {
    hausdorff_sets(std::slice::from_ref(a), std::slice::from_ref(b))
}

/// Symmetric Hausdorff distance between unions of polylines.
pub fn hausdorff_sets(a: &[Polyline], b: &[Polyline]) -> Result<f64> {
    let segs = |set: &[Polyline]| -> Vec<(Point, Point)> {
        set.iter()
            .flat_map(|l| {
                let lone = if l.points.len() == 1 { vec![(l.points[0], l.points[0])] } else { Vec::new() };
                lone.into_iter().chain(l.segments())
            })
            .collect()
    };
    let (sa, sb) = (segs(a), segs(b));
    if sa.is_empty() || sb.is_empty() {
        return Err(Error::EmptyInput("Hausdorff distance needs two nonempty sets".into()));
    }
    Ok(directed(a, &sb).max(directed(b, &sa)))
}

/// The front and multiplier defining the ansatz at one time.
#[derive(Debug, Clone)]
pub struct AnsatzFrame {
    pub t: f64,
    /// Signed distance with an analytic source shape.
    pub level: LevelFunction,
    pub lambda0: f64,
}

impl AnsatzFrame {
    /// A frame for an analytic front with `λ₀ = K̄/σ`.
    pub fn from_shape(t: f64, shape: &Shape, grid: &GridSpec, sigma: f64) -> Result<Self> {
        let level = signed_distance(shape, grid)?;
        Ok(Self { t, level, lambda0: shape.mean_curvature(grid.dim()) / sigma })
    }
}

/// The one dimensional composite `U(d)` of cutoff, inner and outer
/// expansions, with its first two derivatives in `d`.
struct Composite<'a> {
    p: &'a WaveProfile,
    c: &'a CorrectorProfile,
    eps: f64,
    delta: f64,
    inner_coef: f64,
    minus: f64,
    plus: f64,
}

impl<'a> Composite<'a> {
    fn new(p: &'a WaveProfile, c: &'a CorrectorProfile, eps: f64, delta: f64, order: u8, lambda0: f64) -> Self {
        let well = p.well();
        let outer = |s: f64| s + if order == 1 { eps * lambda0 / well.df(s) } else { 0.0 };
        let inner_coef = if order == 1 { -eps * lambda0 } else { 0.0 };
        Self { p, c, eps, delta, inner_coef, minus: outer(-1.0), plus: outer(1.0) }
    }

    fn eval(&self, d: f64) -> [f64; 3] {
        let delta = self.delta;
        let z = (d.abs() - delta) / delta;
        let zeta = 1.0 - smoothstep(z);
        let far = if d < 0.0 { self.minus } else { self.plus };
        if zeta == 0.0 {
            return [far, 0.0, 0.0];
        }
        let sign = if d < 0.0 { -1.0 } else { 1.0 };
        let dzeta = -smoothstep_d1(z) * sign / delta;
        let d2zeta = -smoothstep_d2(z) / (delta * delta);
        let rho = d / self.eps;
        let (t0, dt0) = self.p.eval(rho);
        let d2t0 = self.p.d2theta0_at(rho);
        let (mut inner, mut dinner, mut d2inner) = (t0, dt0, d2t0);
        if self.inner_coef != 0.0 {
            let (t1, dt1) = self.c.eval(rho);
            inner += self.inner_coef * t1;
            dinner += self.inner_coef * dt1;
            d2inner += self.inner_coef * self.c.d2theta1_at(rho, self.p);
        }
        let (di, d2i) = (dinner / self.eps, d2inner / (self.eps * self.eps));
        let gap = inner - far;
        [far + zeta * gap, dzeta * gap + zeta * di, d2zeta * gap + 2.0 * dzeta * di + zeta * d2i]
    }
}

/// Residual of the ansatz inserted into the equation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzResidual {
    /// `(∫₀ᵀ ‖δ‖²_{L²} dt)^{1/2}` by the trapezoid rule over the frames; the
    /// spatial norm when there is a single frame.
    pub l2: f64,
    /// `sup_t ‖δ(t)‖_{L²}`.
    pub sup: f64,
    pub per_frame: Vec<(f64, f64)>,
    /// Mean of the ansatz at each frame.
    pub means: Vec<f64>,
    pub max_mass_drift: f64,
    /// Mass-corrected ansatz fields.
    pub fields: Vec<ScalarField>,
}

/// Builds the composite ansatz on each frame and evaluates
/// `ũ_t − Δũ − ε⁻²(f(ũ) − ⨍f(ũ))` at the grid points. Space derivatives are
/// exact (through `U'' + U'Δd` with `Δd = κ/(1 + κd)`), time derivatives are
/// centred differences over the frames. A constant shift per frame keeps
/// the mean of the ansatz equal to its initial value.
pub fn ansatz_residual(
    frames: &[AnsatzFrame],
    p: &WaveProfile,
    c: &CorrectorProfile,
    eps: f64,
    order: u8,
) -> Result<AnsatzResidual> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("no ansatz frames".into()));
    }
    if order > 1 {
        return Err(Error::InvalidInput(format!("order must be 0 or 1, got {order}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("ε must be positive, got {eps}")));
    }
    if frames.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::InvalidInput("frame times must increase".into()));
    }
    let grid = frames[0].level.grid;
    if frames.iter().any(|f| f.level.grid != grid) {
        return Err(Error::ShapeMismatch("frames use different grids".into()));
    }
    let well = p.well();
    let mut raw = Vec::with_capacity(frames.len());
    let mut lap = Vec::with_capacity(frames.len());
    for frame in frames {
        let shape = frame.level.source.as_ref().ok_or_else(|| {
            Error::InvalidInput("ansatz frames need an analytic front for the curvature term".into())
        })?;
        let comp = Composite::new(p, c, eps, frame.level.delta, order, frame.lambda0);
        let mut values = Vec::with_capacity(grid.len());
        let mut lvalues = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let x = grid.point(i, j);
                let d = frame.level.at(i, j);
                let [u, du, d2u] = comp.eval(d);
                let lap_d = if grid.dim() == 2 && du != 0.0 {
                    let k = shape.curvature(x);
                    k / (1.0 + k * d)
                } else {
                    0.0
                };
                values.push(u);
                lvalues.push(d2u + du * lap_d);
            }
        }
        raw.push(values);
        lap.push(lvalues);
    }
    let m0 = pairwise_mean(&raw[0]);
    for values in raw.iter_mut() {
        let shift = m0 - pairwise_mean(values);
        values.iter_mut().for_each(|v| *v += shift);
    }
    let means: Vec<f64> = raw.iter().map(|v| pairwise_mean(v)).collect();
    let max_mass_drift = means.iter().map(|m| (m - means[0]).abs()).fold(0.0, f64::max);
    let vol = grid.cell_volume();
    let k = frames.len();
    let mut per_frame = Vec::with_capacity(k);
    for n in 0..k {
        let u = &raw[n];
        let fu: Vec<f64> = u.iter().map(|&v| well.f(v)).collect();
        let fbar = pairwise_mean(&fu);
        let (a, b) = match (n, k) {
            (_, 1) => (n, n),
            (0, _) => (0, 1),
            (n, k) if n == k - 1 => (n - 1, n),
            (n, _) => (n - 1, n + 1),
        };
        let span = frames[b].t - frames[a].t;
        let sq: Vec<f64> = (0..u.len())
            .map(|i| {
                let ut = if a == b { 0.0 } else { (raw[b][i] - raw[a][i]) / span };
                let r = ut - lap[n][i] - (fu[i] - fbar) / (eps * eps);
                r * r
            })
            .collect();
        per_frame.push((frames[n].t, (pairwise_sum(&sq) * vol).sqrt()));
    }
    let sup = per_frame.iter().map(|x| x.1).fold(0.0, f64::max);
    let l2 = if k == 1 {
        per_frame[0].1
    } else {
        per_frame.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1.powi(2) + w[1].1.powi(2))).sum::<f64>().sqrt()
    };
    let fields = raw.into_iter().map(|v| ScalarField::new(grid, v, eps)).collect::<Result<Vec<_>>>()?;
    Ok(AnsatzResidual { l2, sup, per_frame, means, max_mass_drift, fields })
}

/// Distance between a phase-field trajectory and an ansatz family.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzError {
    pub initial: f64,
    pub sup: f64,
    pub per_time: Vec<(f64, f64)>,
}

/// `sup_t ‖u(t) − ũ(t)‖_{L²}` over the recorded fields of `traj` (which must
/// keep fields). The ansatz is shifted by one constant so that the initial
/// difference has zero mean.
pub fn error_vs_ansatz(traj: &Trajectory, ansatz: &[ScalarField]) -> Result<AnsatzError> {
    if traj.fields.len() != ansatz.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} recorded fields against {} ansatz fields",
            traj.fields.len(),
            ansatz.len()
        )));
    }
    if traj.fields.is_empty() {
        return Err(Error::EmptyInput("trajectory kept no fields".into()));
    }
    if traj.fields.iter().zip(ansatz).any(|((_, u), a)| u.grid != a.grid) {
        return Err(Error::ShapeMismatch("trajectory and ansatz grids differ".into()));
    }
    let shift = traj.fields[0].1.mean() - ansatz[0].mean();
    let vol = ansatz[0].grid.cell_volume();
    let per_time: Vec<(f64, f64)> = traj
        .fields
        .iter()
        .zip(ansatz)
        .map(|((t, u), a)| {
            let sq: Vec<f64> = u.values.iter().zip(&a.values).map(|(x, y)| (x - y - shift).powi(2)).collect();
            (*t, (pairwise_sum(&sq) * vol).sqrt())
        })
        .collect();
    let sup = per_time.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(AnsatzError { initial: per_time[0].1, sup, per_time })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub front_err: f64,
    pub front_order: Option<f64>,
    pub lambda_err: f64,
    pub lambda_order: Option<f64>,
}

/// Settings for [`convergence_study_with`].
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub shape: Shape,
    pub eps_list: Vec<f64>,
    pub t_end: f64,
    pub order: u8,
    /// Grid spacing as a fraction of ε.
    pub h_ratio: f64,
    /// Domain half-width; `None` leaves 0.3 around the bounding box.
    pub half_width: Option<f64>,
    pub markers: usize,
    /// Approximate number of recorded times per run.
    pub records: usize,
    pub well: DoubleWell,
    pub dt_rule: DtRule,
}

/// Time step of the phase-field runs as a function of ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `dt = c·ε²`.
    Quadratic(f64),
    /// `dt = c·ε³`. Keeps the splitting error of the interface velocity,
    /// which is of relative size `dt/ε²`, shrinking with ε.
    Cubic(f64),
}

impl DtRule {
    pub fn dt(&self, eps: f64) -> f64 {
        match *self {
            DtRule::Quadratic(c) => c * eps * eps,
            DtRule::Cubic(c) => c * eps * eps * eps,
        }
    }
}

impl StudyConfig {
    pub fn new(shape: Shape, eps_list: Vec<f64>, t_end: f64, order: u8) -> Self {
        Self {
            shape,
            eps_list,
            t_end,
            order,
            h_ratio: 0.5,
            half_width: None,
            markers: 256,
            records: 20,
            well: DoubleWell::cubic(),
            dt_rule: DtRule::Quadratic(0.1),
        }
    }

    pub fn domain_half_width(&self) -> f64 {
        self.half_width.unwrap_or_else(|| {
            let (lo, hi) = self.shape.bounding_box();
            lo[0].abs().max(lo[1].abs()).max(hi[0].abs()).max(hi[1].abs()) + 0.3
        })
    }

    fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::EmptyInput("eps list is empty".into()));
        }
        if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("eps list must be strictly decreasing".into()));
        }
        if !(self.h_ratio > 0.0 && self.h_ratio <= 0.5) {
            return Err(Error::InvalidInput(format!("h_ratio must lie in (0, 0.5], got {}", self.h_ratio)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !self.shape.is_closed() {
            return Err(Error::InvalidInput("convergence studies need a closed front".into()));
        }
        Ok(())
    }
}

/// Per-ε outcome of a study, before orders are filled in.
#[derive(Debug, Clone)]
pub struct StudyCell {
    pub eps: f64,
    pub grid: GridSpec,
    pub front_err: f64,
    pub lambda_err: f64,
    /// `(t, Hausdorff error, λ_ε, λ₀)` at each record.
    pub records: Vec<(f64, f64, f64, f64)>,
}

fn interpolate(rows: &[(f64, f64)], t: f64) -> f64 {
    let k = rows.partition_point(|r| r.0 < t);
    if k == 0 {
        return rows[0].1;
    }
    if k >= rows.len() {
        return rows[rows.len() - 1].1;
    }
    let (a, b) = (rows[k - 1], rows[k]);
    if b.0 == a.0 {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Runs the phase field and the marker flow for one ε and compares them.
pub fn study_cell(cfg: &StudyConfig, eps: f64, p: &WaveProfile, c: &CorrectorProfile) -> Result<StudyCell> {
    let half = cfg.domain_half_width();
    let n = (2.0 * half / (cfg.h_ratio * eps) - 1e-9).ceil() as usize;
    let grid = GridSpec::square(n, half)?;
    let lf = signed_distance(&cfg.shape, &grid)?;
    let u0 = prepare_initial(&lf, p, c, eps, cfg.order)?;
    let mut sim = SimConfig::new(eps, cfg.t_end, grid);
    sim.well = cfg.well.clone();
    sim.dt = cfg.dt_rule.dt(eps);
    let (steps, _) = sim.schedule();
    sim.record_every = (steps / cfg.records.max(1)).max(1);
    let traj = run(&sim, &u0)?;

    let front = FrontCurve::from_shape(&cfg.shape, cfg.markers)?;
    let spacing = front.min_spacing();
    let times: Vec<f64> = traj.fronts.iter().map(|f| f.0).collect();
    let flow = evolve_front_until(&front, 0.2 * spacing * spacing, cfg.t_end, 1, p.sigma, &times)?;
    if flow.snapshots.len() != times.len() {
        return Err(Error::Convergence(format!(
            "marker flow produced {} snapshots for {} records",
            flow.snapshots.len(),
            times.len()
        )));
    }
    let lambda0: Vec<(f64, f64)> = flow.diagnostics.rows.iter().map(|r| (r.t, r.lambda0)).collect();
    let mut records = Vec::with_capacity(times.len());
    for (((t, lines), snap), row) in traj.fronts.iter().zip(&flow.snapshots).zip(&traj.rows) {
        let err = if lines.is_empty() {
            f64::INFINITY
        } else {
            hausdorff_sets(lines, &snap.polylines())?
        };
        records.push((*t, err, row.lambda, interpolate(&lambda0, *t)));
    }
    let front_err = records.iter().map(|r| r.1).fold(0.0, f64::max);
    let lambda_err = records.iter().map(|r| (r.2 - r.3).abs()).fold(0.0, f64::max);
    Ok(StudyCell { eps, grid, front_err, lambda_err, records })
}

/// Observed order `log(e₁/e₂)/log(ε₁/ε₂)` between consecutive rows.
pub fn observed_orders(cells: &[(f64, f64, f64)]) -> Vec<ConvergenceRow> {
    let order = |e1: f64, e2: f64, k1: f64, k2: f64| (e1 / e2).ln() / (k1 / k2).ln();
    cells
        .iter()
        .enumerate()
        .map(|(i, &(eps, fe, le))| {
            let prev = i.checked_sub(1).map(|k| cells[k]);
            ConvergenceRow {
                eps,
                front_err: fe,
                front_order: prev.map(|(pe, pf, _)| order(pf, fe, pe, eps)),
                lambda_err: le,
                lambda_order: prev.map(|(pe, _, pl)| order(pl, le, pe, eps)),
            }
        })
        .collect()
}

/// Runs every ε of `cfg` (concurrently) and reports errors and orders.
pub fn convergence_study_with(cfg: &StudyConfig) -> Result<(Vec<ConvergenceRow>, Vec<StudyCell>)> {
    cfg.validate()?;
    let p = compute_theta0(&cfg.well, DEFAULT_RHO_MAX, DEFAULT_POINTS)?;
    let c = compute_theta1(&p)?;
    let cells: Vec<StudyCell> =
        cfg.eps_list.par_iter().map(|&eps| study_cell(cfg, eps, &p, &c)).collect::<Result<_>>()?;
    let triples: Vec<(f64, f64, f64)> = cells.iter().map(|c| (c.eps, c.front_err, c.lambda_err)).collect();
    Ok((observed_orders(&triples), cells))
}

pub fn convergence_study(shape: &Shape, eps_list: &[f64], t_end: f64, order: u8) -> Result<Vec<ConvergenceRow>> {
    convergence_study_with(&StudyConfig::new(shape.clone(), eps_list.to_vec(), t_end, order)).map(|r| r.0)
}

/// `λ_ε` of the ansatz fields, for comparison with `λ₀`.
pub fn ansatz_lambdas(fields: &[ScalarField], well: &DoubleWell) -> Vec<f64> {
    fields.iter().map(|u| lambda_of(u, well)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acsolver::prepare_initial_with;

    fn profiles() -> (WaveProfile, CorrectorProfile) {
        let p = compute_theta0(&DoubleWell::cubic(), DEFAULT_RHO_MAX, DEFAULT_POINTS).unwrap();
        let c = compute_theta1(&p).unwrap();
        (p, c)
    }

    #[test]
    fn cosine_probe_matches_closed_form() {
        let probe = deterministic_probe(1).unwrap();
        let exact = (4.0 / (3.0 * std::f64::consts::PI)) / (0.5f64.sqrt() * 2.0 * std::f64::consts::PI.powi(2));
        assert!((probe.ratio - exact).abs() <= 1e-3, "{}", probe.ratio);
        assert!((probe.ratio - 0.03041).abs() <= 1e-3);
        assert_eq!(probe.p, 1.0);
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let grid = probe_grid(1).unwrap();
        let base: Vec<f64> = (0..grid.nx).map(|i| (2.0 * std::f64::consts::PI * grid.x(i)).cos()).collect();
        let r = interpolation_ratio(&base, &grid).unwrap().ratio;
        for c in [0.1, 10.0] {
            let scaled: Vec<f64> = base.iter().map(|v| c * v).collect();
            let rc = interpolation_ratio(&scaled, &grid).unwrap().ratio;
            assert!((rc - r).abs() <= 1e-10 * r.max(1.0));
        }
    }

    #[test]
    fn degenerate_and_biased_fields_are_rejected() {
        let grid = probe_grid(1).unwrap();
        assert!(matches!(interpolation_ratio(&vec![0.0; grid.nx], &grid), Err(Error::Degenerate(_))));
        assert!(matches!(interpolation_ratio(&vec![1.0; grid.nx], &grid), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn search_is_deterministic_and_contains_probe() {
        let a = inequality_search(1, 200, 11).unwrap();
        let b = inequality_search(1, 200, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.c_emp >= deterministic_probe(1).unwrap().ratio);
        assert!(inequality_search(1, 50, 11).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let seg = Polyline::open(vec![[0.0, 0.0], [1.0, 0.0]]);
        let up = Polyline::open(vec![[0.0, 0.05], [1.0, 0.05]]);
        assert!((hausdorff(&seg, &up).unwrap() - 0.05).abs() <= 1e-12);
        assert_eq!(hausdorff(&seg, &seg).unwrap(), 0.0);
        let circle = |r: f64| Polyline::closed(Shape::circle(r).markers(400));
        let d = hausdorff(&circle(1.0), &circle(1.1)).unwrap();
        assert!((d - 0.1).abs() <= 1e-3, "{d}");
        assert!(hausdorff_sets(&[], &[seg]).is_err());
    }

    #[test]
    fn hausdorff_finds_interior_maximum() {
        // The farthest point of the long segment from the two short ones is its midpoint.
        let long = Polyline::open(vec![[0.0, 0.0], [2.0, 0.0]]);
        let short = vec![Polyline::open(vec![[0.0, 0.0], [0.0, 0.1]]), Polyline::open(vec![[2.0, 0.0], [2.0, 0.1]])];
        let d = hausdorff_sets(std::slice::from_ref(&long), &short).unwrap();
        assert!((d - 1.0).abs() <= 1e-12, "{d}");
    }

    #[test]
    fn composite_matches_prepared_initial_data() {
        let (p, c) = profiles();
        let g = GridSpec::square(50, 1.0).unwrap();
        let shape = Shape::circle(0.7);
        let frame = AnsatzFrame::from_shape(0.0, &shape, &g, p.sigma).unwrap();
        let u0 = prepare_initial(&frame.level, &p, &c, 0.08, 1).unwrap();
        let comp = Composite::new(&p, &c, 0.08, frame.level.delta, 1, frame.lambda0);
        for (k, d) in frame.level.d.iter().enumerate() {
            assert!((comp.eval(*d)[0] - u0.values[k]).abs() <= 1e-14);
        }
        let again = prepare_initial_with(&frame.level, &p, &c, 0.08, 1, frame.lambda0).unwrap();
        assert_eq!(again.values, u0.values);
    }

    #[test]
    fn composite_derivatives_match_differences() {
        let (p, c) = profiles();
        let comp = Composite::new(&p, &c, 0.05, 0.1, 1, 0.67);
        let h = 1e-5;
        for d in [-0.17, -0.12, -0.03, 0.0, 0.02, 0.11, 0.15, 0.19] {
            let [_, du, d2u] = comp.eval(d);
            let fd1 = (comp.eval(d + h)[0] - comp.eval(d - h)[0]) / (2.0 * h);
            let fd2 = (comp.eval(d + h)[1] - comp.eval(d - h)[1]) / (2.0 * h);
            assert!((du - fd1).abs() <= 1e-5 * (1.0 + du.abs()), "d={d}: {du} vs {fd1}");
            // The slope samples are only C¹-interpolated, so their difference
            // quotient carries an O(h_ρ) error against the exact ODE value.
            assert!((d2u - fd2).abs() <= 2e-3 * (1.0 + d2u.abs()), "d={d}: {d2u} vs {fd2}");
        }
    }

    #[test]
    fn flat_interface_residual_is_tiny() {
        let (p, c) = profiles();
        let g = GridSpec::line(400, 1.0).unwrap();
        let frame = AnsatzFrame::from_shape(0.0, &Shape::Line { offset: 0.0 }, &g, p.sigma).unwrap();
        let r = ansatz_residual(&[frame], &p, &c, 0.025, 0).unwrap();
        assert!(r.l2 <= 1e-6, "{:e}", r.l2);
    }

    #[test]
    fn orders_follow_errors() {
        let rows = observed_orders(&[(0.08, 0.04, 0.2), (0.04, 0.01, 0.1)]);
        assert!(rows[0].front_order.is_none());
        assert!((rows[1].front_order.unwrap() - 2.0).abs() < 1e-12);
        assert!((rows[1].lambda_order.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_vs_identical_fields_is_zero() {
        let g = GridSpec::square(20, 1.0).unwrap();
        let u = ScalarField::from_fn(g, 0.1, |x| x[0].sin()).unwrap();
        let traj = Trajectory {
            rows: Vec::new(),
            fronts: Vec::new(),
            fields: vec![(0.0, u.clone()), (0.1, u.clone())],
            final_field: u.clone(),
            dt: 0.1,
        };
        let e = error_vs_ansatz(&traj, &[u.clone(), u.clone()]).unwrap();
        assert_eq!(e.sup, 0.0);
        assert!(error_vs_ansatz(&traj, &[u]).is_err());
    }
}
