//! Double equal-well nonlinearities.
//!
//! A [`DoubleWell`] carries `f`, its first two derivatives and the potential
//! `F(u) = −∫_{−1}^u f(s) ds`. Wells sit at `u = ±1`. Beyond the tail
//! threshold `M` the nonlinearity is expected to be one-sided
//! (`f(u)·sign(u) < 0`, `u·f''(u) ≤ 0`) so that the reaction term always
//! pushes back towards the wells.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tolerance used by [`DoubleWell::validate`].
pub const VALIDATION_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct DoubleWell {
    name: String,
    f: ScalarFn,
    df: ScalarFn,
    d2f: ScalarFn,
    potential: ScalarFn,
    tail_threshold: f64,
}

impl fmt::Debug for DoubleWell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoubleWell")
            .field("name", &self.name)
            .field("tail_threshold", &self.tail_threshold)
            .finish()
    }
}

impl DoubleWell {
    /// `f(u) = u − u³` on `[−2, 2]`, continued C² beyond `|u| = 2` into
    /// linear growth with the second derivative ramped to zero over a unit
    /// interval. On `[−2, 2]`, `F(u) = (1 − u²)²/4`.
    pub fn cubic() -> Self {
        Self {
            name: "cubic".to_string(),
            f: Arc::new(cubic::f),
            df: Arc::new(cubic::df),
            d2f: Arc::new(cubic::d2f),
            potential: Arc::new(cubic::potential),
            tail_threshold: cubic::M,
        }
    }

    /// Builds a well from `f`, `f'` and `f''`. The potential is obtained by
    /// Gauss-Legendre quadrature of `−f` from `−1`.
    pub fn from_functions(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tail_threshold: f64,
    ) -> Self {
        let f: ScalarFn = Arc::new(f);
        let integrand = f.clone();
        let potential: ScalarFn = Arc::new(move |u: f64| {
            let panels = ((u + 1.0).abs() * 16.0).ceil().max(4.0) as usize;
            let g = integrand.clone();
            -gauss_legendre(move |s| g(s), -1.0, u, panels)
        });
        Self {
            name: name.into(),
            f,
            df: Arc::new(df),
            d2f: Arc::new(d2f),
            potential,
            tail_threshold,
        }
    }

    /// Looks up a well by the name used in configuration files.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "cubic" => Ok(Self::cubic()),
            other => Err(Error::InvalidInput(format!("unknown well '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tail_threshold(&self) -> f64 {
        self.tail_threshold
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    #[inline]
    pub fn d2f(&self, u: f64) -> f64 {
        (self.d2f)(u)
    }

    /// `F(u) = −∫_{−1}^u f`.
    #[inline]
    pub fn potential(&self, u: f64) -> f64 {
        (self.potential)(u)
    }

    /// Integrand of the Lyapunov functional, `ε|∇u|²/2 + F(u)/ε`.
    pub fn energy_density(&self, u: f64, grad_sq: f64, eps: f64) -> f64 {
        debug_assert!(eps > 0.0);
        0.5 * eps * grad_sq + self.potential(u) / eps
    }

    /// Largest `|f'|` on `[lo, hi]`, sampled.
    pub fn max_abs_df(&self, lo: f64, hi: f64) -> f64 {
        let n = 2001;
        (0..n)
            .map(|i| self.df(lo + (hi - lo) * i as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Checks every structural assumption on a uniform sample of
    /// `[−M−2, M+2]`. Failures are reported, not raised.
    pub fn validate(&self, samples: usize) -> Result<ValidationReport> {
        if samples < 100 {
            return Err(Error::InvalidInput(format!("validate_wells needs ≥ 100 samples, got {samples}")));
        }
        let m = self.tail_threshold;
        let lo = -m - 2.0;
        let hi = m + 2.0;
        let xs: Vec<f64> = (0..samples)
            .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
            .collect();

        let mut checks = Vec::new();

        let zero_at_wells = self.f(1.0).abs().max(self.f(-1.0).abs());
        checks.push(WellCheck::new("f(±1)=0", zero_at_wells, zero_at_wells <= VALIDATION_TOL));

        let slope = self.df(1.0).max(self.df(-1.0));
        checks.push(WellCheck::new("f'(±1)<0", slope, slope < 0.0));

        let interior_min = xs
            .iter()
            .filter(|u| u.abs() < 1.0 - 1e-9)
            .map(|&u| self.potential(u))
            .fold(f64::INFINITY, f64::min);
        checks.push(WellCheck::new("F>0 on (-1,1)", interior_min, interior_min > 0.0));

        let well_depth = self.potential(-1.0).abs().max(self.potential(1.0).abs());
        checks.push(WellCheck::new("F(±1)=0", well_depth, well_depth <= VALIDATION_TOL));

        let tail: Vec<f64> = xs.iter().copied().filter(|u| u.abs() >= m).collect();
        let curvature = tail.iter().map(|&u| u * self.d2f(u)).fold(f64::NEG_INFINITY, f64::max);
        checks.push(WellCheck::new("tail u*f''(u)<=0", curvature, curvature <= VALIDATION_TOL));

        let restoring = tail
            .iter()
            .map(|&u| self.f(u) * u.signum())
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(WellCheck::new("tail f(u)*sign(u)<0", restoring, restoring < 0.0));

        Ok(ValidationReport { checks })
    }
}

/// Outcome of one structural check. `value` is the worst sampled value of
/// the checked quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct WellCheck {
    pub name: &'static str,
    pub value: f64,
    pub passed: bool,
}

impl WellCheck {
    fn new(name: &'static str, value: f64, passed: bool) -> Self {
        Self { name, value, passed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<WellCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn check(&self, name: &str) -> Option<&WellCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

mod cubic {
    pub const M: f64 = 2.0;

    // Tail for u ≥ M in s = u − M: f'' = −12(1 − s)³ on [0, 1], zero after.
    const F_AT_M: f64 = -6.0;
    const DF_AT_M: f64 = -11.0;
    const POT_AT_M: f64 = 2.25;
    const F_RAMP_END: f64 = -19.4;
    const DF_RAMP_END: f64 = -14.0;
    const INT_RAMP_END: f64 = -12.5;

    fn tail_f(s: f64) -> f64 {
        if s <= 1.0 {
            let q = 1.0 - s;
            F_AT_M + DF_AT_M * s - 3.0 * (s - (1.0 - q.powi(5)) / 5.0)
        } else {
            F_RAMP_END + DF_RAMP_END * (s - 1.0)
        }
    }

    fn tail_df(s: f64) -> f64 {
        if s <= 1.0 {
            DF_AT_M - 3.0 * (1.0 - (1.0 - s).powi(4))
        } else {
            DF_RAMP_END
        }
    }

    fn tail_d2f(s: f64) -> f64 {
        if s <= 1.0 {
            -12.0 * (1.0 - s).powi(3)
        } else {
            0.0
        }
    }

    /// ∫₀ˢ f(M + x) dx.
    fn tail_integral(s: f64) -> f64 {
        if s <= 1.0 {
            let q = 1.0 - s;
            F_AT_M * s + 0.5 * DF_AT_M * s * s
                - 3.0 * (0.5 * s * s - (s - (1.0 - q.powi(6)) / 6.0) / 5.0)
        } else {
            let r = s - 1.0;
            INT_RAMP_END + F_RAMP_END * r + 0.5 * DF_RAMP_END * r * r
        }
    }

    pub fn f(u: f64) -> f64 {
        if u.abs() <= M {
            u - u * u * u
        } else {
            u.signum() * tail_f(u.abs() - M)
        }
    }

    pub fn df(u: f64) -> f64 {
        if u.abs() <= M {
            1.0 - 3.0 * u * u
        } else {
            tail_df(u.abs() - M)
        }
    }

    pub fn d2f(u: f64) -> f64 {
        if u.abs() <= M {
            -6.0 * u
        } else {
            u.signum() * tail_d2f(u.abs() - M)
        }
    }

    pub fn potential(u: f64) -> f64 {
        if u.abs() <= M {
            let w = 1.0 - u * u;
            0.25 * w * w
        } else {
            POT_AT_M - tail_integral(u.abs() - M)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shifted() -> DoubleWell {
        DoubleWell::from_functions("shifted", |u| u - u * u * u + 0.1, |u| 1.0 - 3.0 * u * u, |u| -6.0 * u, 2.0)
    }

    fn reversed() -> DoubleWell {
        DoubleWell::from_functions("reversed", |u| u * u * u - u, |u| 3.0 * u * u - 1.0, |u| 6.0 * u, 2.0)
    }

    #[test]
    fn cubic_values() {
        let w = DoubleWell::cubic();
        assert_eq!(w.f(1.0), 0.0);
        assert_eq!(w.f(-1.0), 0.0);
        assert_eq!(w.f(0.0), 0.0);
        assert_eq!(w.df(0.0), 1.0);
        assert_eq!(w.potential(0.0), 0.25);
        assert_eq!(w.df(1.0), -2.0);
    }

    #[test]
    fn cubic_passes_validation() {
        let report = DoubleWell::cubic().validate(1000).unwrap();
        assert!(report.all_passed(), "{:?}", report);
    }

    #[test]
    fn shifted_well_fails_zero_check() {
        let report = shifted().validate(1000).unwrap();
        assert!(!report.all_passed());
        assert!(report.failed().contains(&"f(±1)=0"));
        assert!((report.check("f(±1)=0").unwrap().value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn reversed_well_fails_slope_check() {
        let report = reversed().validate(1000).unwrap();
        let slope = report.check("f'(±1)<0").unwrap();
        assert!(!slope.passed);
        assert_eq!(slope.value, 2.0);
    }

    #[test]
    fn validate_needs_enough_samples() {
        assert!(matches!(DoubleWell::cubic().validate(99), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn energy_density_examples() {
        let w = DoubleWell::cubic();
        assert_eq!(w.energy_density(1.0, 0.0, 0.1), 0.0);
        assert!((w.energy_density(0.0, 0.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((w.energy_density(1.0, 2.0, 0.1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tail_is_c2_at_threshold() {
        let w = DoubleWell::cubic();
        for m in [2.0, -2.0, 3.0, -3.0] {
            let h = 1e-9;
            assert!((w.f(m + h) - w.f(m - h)).abs() < 1e-7);
            assert!((w.df(m + h) - w.df(m - h)).abs() < 1e-7);
            assert!((w.d2f(m + h) - w.d2f(m - h)).abs() < 1e-7);
            assert!((w.potential(m + h) - w.potential(m - h)).abs() < 1e-7);
        }
    }

    #[test]
    fn potential_derivative_is_minus_f_everywhere() {
        let w = DoubleWell::cubic();
        let h = 1e-5;
        for i in 0..=10_000 {
            let u = -4.0 + 8.0 * i as f64 / 10_000.0;
            let fd = (w.potential(u + h) - w.potential(u - h)) / (2.0 * h);
            assert!((fd + w.f(u)).abs() < 1e-8, "u = {u}");
        }
    }

    #[test]
    fn quadrature_potential_matches_closed_form() {
        let w = DoubleWell::from_functions("cubic-q", |u| u - u * u * u, |u| 1.0 - 3.0 * u * u, |u| -6.0 * u, 2.0);
        for &u in &[-1.5f64, -0.3, 0.0, 0.7, 1.0, 1.8] {
            let exact = 0.25 * (1.0 - u * u).powi(2);
            assert!((w.potential(u) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn equal_well_identity() {
        let w = DoubleWell::cubic();
        let integral = gauss_legendre(|s| w.f(s), -1.0, 1.0, 8);
        assert!(integral.abs() < 1e-12);
    }
}
