//! Linearized Allen-Cahn operator around a one dimensional profile ansatz
//! and its lowest Rayleigh quotients, with and without the zero-mean
//! constraint.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{pairwise_dot, pairwise_sum, smoothstep, SymTridiagonal, UniformGrid};
use crate::potential::DoubleWell;
use crate::profile::{compute_theta0, compute_theta1, CorrectorProfile, WaveProfile};
use crate::profile::{DEFAULT_POINTS, DEFAULT_RHO_MAX};

/// Largest ε accepted by [`build_psi`].
pub const MAX_EPS: f64 = 0.25;
/// Bound on the modulation coefficient.
pub const MAX_P_EPS: f64 = 2.0;
/// Stopping tolerance for the eigen-residual, relative to `max(1, ‖A‖∞)`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_INVERSE_ITERATIONS: usize = 60;

/// Cell-centred grid with `n` cells on `[-1, 1]`.
pub fn cell_grid(n: usize) -> UniformGrid {
    let step = 2.0 / n as f64;
    UniformGrid { start: -1.0 + 0.5 * step, step, len: n }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileAnsatz {
    pub grid: UniformGrid,
    pub psi: Vec<f64>,
    pub eps: f64,
    pub p_eps: f64,
}

impl ProfileAnsatz {
    /// A spatially constant state, used for controls.
    pub fn constant(value: f64, n: usize, eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 cells, got {n}")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { grid: cell_grid(n), psi: vec![value; n], eps, p_eps: 0.0 })
    }

    pub fn h(&self) -> f64 {
        self.grid.step
    }
}

/// Samples `θ₀(d/ε) + ε·p·θ₁(d/ε)` near the interface and blends it to
/// `sign(d)` over `√ε ≤ |d| ≤ 2√ε`. `d` holds the signed distance at the
/// points of `grid`.
pub fn build_psi(
    p: &WaveProfile,
    c: &CorrectorProfile,
    d: &[f64],
    grid: UniformGrid,
    eps: f64,
    p_eps: f64,
) -> Result<ProfileAnsatz> {
    if !(eps > 0.0 && eps <= MAX_EPS) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, {MAX_EPS}], got {eps}")));
    }
    if !(p_eps.abs() <= MAX_P_EPS) {
        return Err(Error::InvalidInput(format!("|p_eps| must be at most {MAX_P_EPS}, got {p_eps}")));
    }
    if d.len() != grid.len {
        return Err(Error::ShapeMismatch(format!("{} distance samples for {} grid points", d.len(), grid.len)));
    }
    let root = eps.sqrt();
    let psi = d
        .iter()
        .map(|&di| {
            let zeta = 1.0 - smoothstep((di.abs() - root) / root);
            let far = if di >= 0.0 { 1.0 } else { -1.0 };
            if zeta == 0.0 {
                return far;
            }
            let rho = di / eps;
            let inner = p.theta0_at(rho) + eps * p_eps * c.theta1_at(rho);
            zeta * inner + (1.0 - zeta) * far
        })
        .collect();
    Ok(ProfileAnsatz { grid, psi, eps, p_eps })
}

/// `−D²_h − ε⁻²·f′(ψ)` on the cell-centred grid with mirrored ghost cells.
pub fn assemble(a: &ProfileAnsatz, w: &DoubleWell) -> Result<SymTridiagonal> {
    let n = a.psi.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 cells, got {n}")));
    }
    let h = a.h();
    if h > a.eps / 4.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("grid spacing {h} exceeds eps/4 = {}", a.eps / 4.0)));
    }
    let inv = 1.0 / (h * h);
    let scale = 1.0 / (a.eps * a.eps);
    let diag = (0..n)
        .map(|i| {
            let lap = if i == 0 || i == n - 1 { inv } else { 2.0 * inv };
            lap - scale * w.df(a.psi[i])
        })
        .collect();
    Ok(SymTridiagonal::new(diag, vec![-inv; n - 1]))
}

/// Minimizer of the Rayleigh quotient, unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighMin {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖P(Aφ) − value·φ‖₂ / max(1, ‖A‖∞)` where `P` is the identity or the
    /// projection onto zero-mean vectors.
    pub residual: f64,
    pub iterations: usize,
}

pub fn rayleigh_quotient(op: &SymTridiagonal, x: &[f64]) -> f64 {
    pairwise_dot(x, &op.matvec(x)) / pairwise_dot(x, x)
}

fn normalize(x: &mut [f64]) {
    let norm = pairwise_dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

fn remove_mean(x: &mut [f64]) {
    let mean = pairwise_sum(x) / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn residual(op: &SymTridiagonal, x: &[f64], value: f64, zero_mean: bool) -> f64 {
    let mut ax = op.matvec(x);
    if zero_mean {
        remove_mean(&mut ax);
    }
    let r: f64 = ax.iter().zip(x).map(|(a, b)| (a - value * b).powi(2)).sum();
    r.sqrt() / op.norm_inf().max(1.0)
}

/// Solve with a shift, nudging it away from an exactly singular pivot.
fn shifted_solve(op: &SymTridiagonal, shift: f64, rhs: &[f64]) -> Result<(Vec<f64>, usize)> {
    let nudge = f64::EPSILON * op.norm_inf().max(1.0);
    for k in 0..8 {
        if let Some(out) = op.solve_shifted(shift - k as f64 * nudge, rhs) {
            return Ok(out);
        }
    }
    Err(Error::Convergence(format!("shifted operator is singular at {shift}")))
}

/// Number of zero-mean Rayleigh values below `mu`: the inertia of the
/// bordered matrix `[[A − μ, 1], [1ᵀ, 0]]` minus one.
fn count_constrained_below(op: &SymTridiagonal, mu: f64, ones: &[f64]) -> Result<usize> {
    let (z, negatives) = shifted_solve(op, mu, ones)?;
    let g = pairwise_sum(&z);
    Ok((negatives + usize::from(g > 0.0)).saturating_sub(1))
}

fn smallest_constrained_value(op: &SymTridiagonal) -> Result<f64> {
    let ones = vec![1.0; op.len()];
    let (mut lo, mut hi) = op.gershgorin();
    let pad = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_constrained_below(op, mid, &ones)? >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn start_vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + 0.1 * (0.7 * i as f64).sin()).collect()
}

/// Smallest Rayleigh quotient of `op`, over all vectors or over vectors with
/// zero sum. The value is located by Sturm bisection (bordered inertia in the
/// zero-mean case) and the minimizer by shifted inverse iteration; the
/// reported value is the Rayleigh quotient of the returned vector.
pub fn min_rayleigh(op: &SymTridiagonal, zero_mean: bool) -> Result<RayleighMin> {
    let n = op.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("operator of size {n} has no nonconstant vectors")));
    }
    let estimate = if zero_mean { smallest_constrained_value(op)? } else { op.eigenvalue(0) };
    let shift = estimate - 1e-10 * estimate.abs().max(1.0);
    let ones = vec![1.0; n];
    let z_one = if zero_mean { Some(shifted_solve(op, shift, &ones)?.0) } else { None };
    let mut x = start_vector(n);
    if zero_mean {
        remove_mean(&mut x);
    }
    normalize(&mut x);
    for it in 1..=MAX_INVERSE_ITERATIONS {
        let (mut y, _) = shifted_solve(op, shift, &x)?;
        if let Some(z1) = &z_one {
            let nu = pairwise_sum(&y) / pairwise_sum(z1);
            y.iter_mut().zip(z1).for_each(|(a, b)| *a -= nu * b);
            remove_mean(&mut y);
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Convergence("inverse iteration produced non-finite values".into()));
        }
        normalize(&mut y);
        x = y;
        let value = rayleigh_quotient(op, &x);
        let res = residual(op, &x, value, zero_mean);
        if res <= RESIDUAL_TOL {
            return Ok(RayleighMin { value, vector: x, residual: res, iterations: it });
        }
    }
    let value = rayleigh_quotient(op, &x);
    Err(Error::Convergence(format!(
        "inverse iteration stalled at residual {:e} after {MAX_INVERSE_ITERATIONS} iterations",
        residual(op, &x, value, zero_mean)
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub eps: f64,
    pub h: f64,
    pub lam_min_all: f64,
    pub lam_min_zero_mean: f64,
    /// Zero-mean minimizer, normalized so that `Σφ²h = 1`.
    pub eigvec: Vec<f64>,
    pub residual_all: f64,
    pub residual_zero_mean: f64,
}

/// Both minima for one assembled ansatz.
pub fn analyze(a: &ProfileAnsatz, w: &DoubleWell) -> Result<SpectralReport> {
    let op = assemble(a, w)?;
    let all = min_rayleigh(&op, false)?;
    let zm = min_rayleigh(&op, true)?;
    let h = a.h();
    let scale = 1.0 / h.sqrt();
    Ok(SpectralReport {
        eps: a.eps,
        h,
        lam_min_all: all.value,
        lam_min_zero_mean: zm.value,
        eigvec: zm.vector.iter().map(|v| v * scale).collect(),
        residual_all: all.residual,
        residual_zero_mean: zm.residual,
    })
}

/// Interface layout for a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepGeometry {
    /// Symmetric bubble `d(x) = |x| − radius`: two interfaces, the far field
    /// is `+1` at both ends.
    Bubble { radius: f64 },
    /// A single interface `d(x) = x`.
    Interface,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub geometry: SweepGeometry,
    /// Grid spacing as a fraction of ε.
    pub h_ratio: f64,
    /// Constant quasi-distance shift: `d → d − ε·h1`.
    pub h1: f64,
    pub well: DoubleWell,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { geometry: SweepGeometry::Bubble { radius: 0.5 }, h_ratio: 0.25, h1: 0.0, well: DoubleWell::cubic() }
    }
}

pub fn sweep(eps_list: &[f64], p_eps: f64) -> Result<Vec<SpectralReport>> {
    sweep_with(eps_list, p_eps, &SweepOptions::default())
}

pub fn sweep_with(eps_list: &[f64], p_eps: f64, opts: &SweepOptions) -> Result<Vec<SpectralReport>> {
    if eps_list.is_empty() {
        return Err(Error::EmptyInput("eps list is empty".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps list must be strictly decreasing".into()));
    }
    if !(opts.h_ratio > 0.0 && opts.h_ratio <= 0.25) {
        return Err(Error::InvalidInput(format!("h_ratio must lie in (0, 0.25], got {}", opts.h_ratio)));
    }
    let p = compute_theta0(&opts.well, DEFAULT_RHO_MAX, DEFAULT_POINTS)?;
    let c = compute_theta1(&p)?;
    eps_list
        .par_iter()
        .map(|&eps| {
            let n = (2.0 / (opts.h_ratio * eps) - 1e-9).ceil() as usize;
            let grid = cell_grid(n);
            let d: Vec<f64> = grid
                .points()
                .into_iter()
                .map(|x| {
                    let base = match opts.geometry {
                        SweepGeometry::Bubble { radius } => x.abs() - radius,
                        SweepGeometry::Interface => x,
                    };
                    base - eps * opts.h1
                })
                .collect();
            let a = build_psi(&p, &c, &d, grid, eps, p_eps)?;
            analyze(&a, &opts.well)
        })
        .collect()
}

/// Smallest `C ≥ 0` with `lam_min_zero_mean ≥ −C` for every report.
pub fn uniform_bound(reports: &[SpectralReport]) -> f64 {
    reports.iter().map(|r| -r.lam_min_zero_mean).fold(0.0, f64::max)
}
