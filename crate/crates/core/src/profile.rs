//! Traveling-wave profile θ₀, corrector θ₁ and the linearized operator
//! `L v = −v'' − f'(θ₀) v`.
//!
//! θ₀ solves `θ₀'' + f(θ₀) = 0`, `θ₀(±∞) = ±1`, `θ₀(0) = 0`. With equal wells
//! the first integral gives `θ₀' = √(2F(θ₀))`, which is integrated from the
//! pinning point with fixed-step RK4 (several sub-steps per grid cell).

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, hermite, simpson, tridiag::solve_tridiagonal, UniformGrid};
use crate::potential::DoubleWell;

pub const DEFAULT_RHO_MAX: f64 = 12.0;
pub const DEFAULT_POINTS: usize = 4801;
/// Threshold on `|∫hθ₀'|` for accepting a right-hand side of `LQ = h`.
pub const SOLVABILITY_TOL: f64 = 1e-6;

const MIN_RHO_MAX: f64 = 8.0;
const MIN_POINTS: usize = 1000;
const RK_SUBSTEPS: usize = 8;

/// `α = min{√(−f'(1)), √(−f'(−1))}`.
pub fn decay_rate(well: &DoubleWell) -> Result<f64> {
    let (plus, minus) = (well.df(1.0), well.df(-1.0));
    if plus >= 0.0 || minus >= 0.0 {
        return Err(Error::Domain(format!(
            "decay rate needs f'(±1) < 0, got f'(1) = {plus}, f'(-1) = {minus}"
        )));
    }
    Ok((-plus).sqrt().min((-minus).sqrt()))
}

#[derive(Debug, Clone)]
pub struct WaveProfile {
    well: DoubleWell,
    pub grid: UniformGrid,
    pub theta0: Vec<f64>,
    pub dtheta0: Vec<f64>,
    pub sigma: f64,
    pub alpha: f64,
}

/// Computes θ₀ on `n_points` uniform samples of `[−rho_max, rho_max]`.
pub fn compute_theta0(well: &DoubleWell, rho_max: f64, n_points: usize) -> Result<WaveProfile> {
    if n_points < MIN_POINTS || n_points.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "n_points must be odd and ≥ {MIN_POINTS}, got {n_points}"
        )));
    }
    if !rho_max.is_finite() || rho_max <= 0.0 {
        return Err(Error::InvalidInput(format!("rho_max must be positive, got {rho_max}")));
    }
    let alpha = decay_rate(well)?;
    if rho_max < MIN_RHO_MAX {
        return Err(Error::Nonconverged(format!(
            "rho_max = {rho_max} < {MIN_RHO_MAX} leaves the exponential tails unresolved"
        )));
    }

    let grid = UniformGrid::symmetric(rho_max, n_points);
    let slope = |theta: f64| -> f64 {
        if theta.abs() >= 1.0 {
            0.0
        } else {
            (2.0 * well.potential(theta).max(0.0)).sqrt()
        }
    };
    let rk4 = |theta: f64, dr: f64| -> f64 {
        let k1 = slope(theta);
        let k2 = slope(theta + 0.5 * dr * k1);
        let k3 = slope(theta + 0.5 * dr * k2);
        let k4 = slope(theta + dr * k3);
        theta + dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };

    let center = n_points / 2;
    let mut theta0 = vec![0.0; n_points];
    let sub = grid.step / RK_SUBSTEPS as f64;
    for i in center + 1..n_points {
        let mut t = theta0[i - 1];
        for _ in 0..RK_SUBSTEPS {
            t = rk4(t, sub);
        }
        theta0[i] = t;
    }
    for i in (0..center).rev() {
        let mut t = theta0[i + 1];
        for _ in 0..RK_SUBSTEPS {
            t = rk4(t, -sub);
        }
        theta0[i] = t;
    }
    let dtheta0: Vec<f64> = theta0.iter().map(|&t| slope(t)).collect();

    let bound = (-alpha * rho_max / 2.0).exp();
    let right_gap = 1.0 - theta0[n_points - 1];
    let left_gap = theta0[0] + 1.0;
    if right_gap > bound || left_gap > bound {
        return Err(Error::Nonconverged(format!(
            "tail gaps ({left_gap:e}, {right_gap:e}) exceed e^(-α·rho_max/2) = {bound:e}"
        )));
    }

    // ∫θ₀'² dρ = ∫_{−1}^{1} √(2F(θ)) dθ.
    let mass = gauss_legendre(slope, -1.0, 1.0, 64);
    let sigma = 2.0 / mass;

    Ok(WaveProfile { well: well.clone(), grid, theta0, dtheta0, sigma, alpha })
}

impl WaveProfile {
    pub fn well(&self) -> &DoubleWell {
        &self.well
    }

    pub fn rho_max(&self) -> f64 {
        self.grid.end()
    }

    pub fn center_index(&self) -> usize {
        self.grid.len / 2
    }

    fn side_rates(&self) -> (f64, f64) {
        ((-self.well.df(-1.0)).sqrt(), (-self.well.df(1.0)).sqrt())
    }

    /// θ₀ and θ₀' at any ρ: Hermite interpolation on the grid, exponential
    /// tails outside it.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        let n = self.grid.len;
        let (rate_minus, rate_plus) = self.side_rates();
        if rho > self.grid.end() {
            let gap = 1.0 - self.theta0[n - 1];
            let e = (-rate_plus * (rho - self.grid.end())).exp();
            (1.0 - gap * e, rate_plus * gap * e)
        } else if rho < self.grid.start {
            let gap = self.theta0[0] + 1.0;
            let e = (-rate_minus * (self.grid.start - rho)).exp();
            (-1.0 + gap * e, rate_minus * gap * e)
        } else {
            hermite(&self.grid, &self.theta0, &self.dtheta0, rho)
        }
    }

    pub fn theta0_at(&self, rho: f64) -> f64 {
        self.eval(rho).0
    }

    pub fn dtheta0_at(&self, rho: f64) -> f64 {
        self.eval(rho).1
    }

    /// θ₀'' from the profile equation.
    pub fn d2theta0_at(&self, rho: f64) -> f64 {
        -self.well.f(self.theta0_at(rho))
    }

    /// `∫θ₀'²` by Simpson on the grid with the exponential tails added in
    /// closed form.
    pub fn dtheta0_sq_integral(&self) -> f64 {
        let sq: Vec<f64> = self.dtheta0.iter().map(|d| d * d).collect();
        let n = self.grid.len;
        let (rate_minus, rate_plus) = self.side_rates();
        simpson(&sq, self.grid.step)
            + sq[n - 1] / (2.0 * rate_plus)
            + sq[0] / (2.0 * rate_minus)
    }

    /// Maximum over interior nodes of `|D²_h θ₀ + f(θ₀)|`.
    pub fn substitution_residual(&self) -> f64 {
        let h2 = self.grid.step * self.grid.step;
        (1..self.grid.len - 1)
            .map(|i| {
                let lap = (self.theta0[i - 1] - 2.0 * self.theta0[i] + self.theta0[i + 1]) / h2;
                (lap + self.well.f(self.theta0[i])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `∫ h θ₀'` by Simpson with tails `h_±` times the remaining mass of θ₀'.
    pub fn project(&self, rhs: &SampledRhs) -> f64 {
        let n = self.grid.len;
        let prod: Vec<f64> = rhs.values.iter().zip(&self.dtheta0).map(|(h, d)| h * d).collect();
        simpson(&prod, self.grid.step)
            + rhs.limit_plus * (1.0 - self.theta0[n - 1])
            + rhs.limit_minus * (self.theta0[0] + 1.0)
    }
}

/// Right-hand side of `LQ = h` sampled on the profile grid, with its limits
/// at `ρ → ±∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRhs {
    pub values: Vec<f64>,
    pub limit_minus: f64,
    pub limit_plus: f64,
}

impl SampledRhs {
    pub fn from_fn(profile: &WaveProfile, h: impl Fn(usize, f64) -> f64, limit_minus: f64, limit_plus: f64) -> Self {
        let values = (0..profile.grid.len).map(|i| h(i, profile.grid.point(i))).collect();
        Self { values, limit_minus, limit_plus }
    }

    pub fn scaled_sum(a: f64, first: &Self, b: f64, second: &Self) -> Self {
        Self {
            values: first.values.iter().zip(&second.values).map(|(x, y)| a * x + b * y).collect(),
            limit_minus: a * first.limit_minus + b * second.limit_minus,
            limit_plus: a * first.limit_plus + b * second.limit_plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSolution {
    pub values: Vec<f64>,
    pub limit_minus: f64,
    pub limit_plus: f64,
    /// `∫ h θ₀'` as measured by the solvability gate.
    pub solvability_integral: f64,
    /// Max-norm residual of the discrete equation over every enforced row.
    pub max_residual: f64,
    /// Residual of the discrete equation at the pinned node `ρ = 0`, whose
    /// row is replaced by `Q(0) = 0`.
    pub pin_defect: f64,
}

/// Solves `−Q'' − f'(θ₀) Q = h`, `Q(0) = 0`, with far-field values
/// `Q(±rho_max) = −h_±/f'(±1)`, by second-order central differences.
pub fn solve_linearized(profile: &WaveProfile, rhs: &SampledRhs) -> Result<LinearizedSolution> {
    let n = profile.grid.len;
    if rhs.values.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "right-hand side has {} samples, profile grid has {n}",
            rhs.values.len()
        )));
    }
    let integral = profile.project(rhs);
    if !(integral.abs() <= SOLVABILITY_TOL) {
        return Err(Error::Solvability { integral, tolerance: SOLVABILITY_TOL });
    }

    let well = profile.well();
    let limit_minus = -rhs.limit_minus / well.df(-1.0);
    let limit_plus = -rhs.limit_plus / well.df(1.0);
    let h = profile.grid.step;
    let h2 = h * h;
    let center = profile.center_index();
    let potential: Vec<f64> = profile.theta0.iter().map(|&t| well.df(t)).collect();

    // Rows scaled by h².
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n - 1];
    let mut b = vec![0.0; n];
    b[0] = limit_minus;
    b[n - 1] = limit_plus;
    for i in 1..n - 1 {
        if i == center {
            continue;
        }
        lower[i - 1] = -1.0;
        upper[i] = -1.0;
        diag[i] = 2.0 - h2 * potential[i];
        b[i] = h2 * rhs.values[i];
    }
    let values = solve_tridiagonal(&lower, &diag, &upper, &b)
        .ok_or_else(|| Error::Convergence("zero pivot in linearized solve".into()))?;

    let row_residual = |i: usize| {
        let lap = (-values[i - 1] + 2.0 * values[i] - values[i + 1]) / h2;
        lap - potential[i] * values[i] - rhs.values[i]
    };
    let max_residual = (1..n - 1)
        .filter(|&i| i != center)
        .map(|i| row_residual(i).abs())
        .fold(0.0, f64::max);
    let pin_defect = row_residual(center);

    Ok(LinearizedSolution {
        values,
        limit_minus,
        limit_plus,
        solvability_integral: integral,
        max_residual,
        pin_defect,
    })
}

/// θ₁: the bounded solution of `Lθ₁ = 1 − σθ₀'`, `θ₁(0) = 0`.
#[derive(Debug, Clone)]
pub struct CorrectorProfile {
    pub grid: UniformGrid,
    pub theta1: Vec<f64>,
    pub dtheta1: Vec<f64>,
    pub limit_minus: f64,
    pub limit_plus: f64,
}

pub fn compute_theta1(profile: &WaveProfile) -> Result<CorrectorProfile> {
    let sigma = profile.sigma;
    let rhs = SampledRhs::from_fn(profile, |i, _| 1.0 - sigma * profile.dtheta0[i], 1.0, 1.0);
    let sol = solve_linearized(profile, &rhs)?;
    let dtheta1 = crate::numeric::gradient_1d(&sol.values, profile.grid.step);
    Ok(CorrectorProfile {
        grid: profile.grid,
        theta1: sol.values,
        dtheta1,
        limit_minus: sol.limit_minus,
        limit_plus: sol.limit_plus,
    })
}

impl CorrectorProfile {
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        if rho > self.grid.end() {
            (self.limit_plus, 0.0)
        } else if rho < self.grid.start {
            (self.limit_minus, 0.0)
        } else {
            hermite(&self.grid, &self.theta1, &self.dtheta1, rho)
        }
    }

    pub fn theta1_at(&self, rho: f64) -> f64 {
        self.eval(rho).0
    }

    /// θ₁'' from `Lθ₁ = 1 − σθ₀'`; zero outside the grid.
    pub fn d2theta1_at(&self, rho: f64, profile: &WaveProfile) -> f64 {
        if rho > self.grid.end() || rho < self.grid.start {
            return 0.0;
        }
        let (theta0, dtheta0) = profile.eval(rho);
        let theta1 = self.theta1_at(rho);
        -profile.well().df(theta0) * theta1 - (1.0 - profile.sigma * dtheta0)
    }

    /// `∫ θ₀'² f''(θ₀) θ₁` by Simpson on the shared grid.
    pub fn orthogonality(&self, profile: &WaveProfile) -> f64 {
        let well = profile.well();
        let integrand: Vec<f64> = (0..self.grid.len)
            .map(|i| {
                let d = profile.dtheta0[i];
                d * d * well.d2f(profile.theta0[i]) * self.theta1[i]
            })
            .collect();
        simpson(&integrand, self.grid.step)
    }
}
