//! Small numerical kernels shared by the solvers.

pub mod quad;
pub mod spline;
pub mod sum;
pub mod tridiag;

pub use quad::{gauss_legendre, simpson};
pub use sum::{pairwise_dot, pairwise_mean, pairwise_sum};
pub use tridiag::SymTridiagonal;

/// Quintic smoothstep on `[0, 1]`, clamped outside. C² with zero first and
/// second derivatives at both ends.
pub fn smoothstep(z: f64) -> f64 {
    let z = z.clamp(0.0, 1.0);
    z * z * z * (10.0 - 15.0 * z + 6.0 * z * z)
}

pub fn smoothstep_d1(z: f64) -> f64 {
    if !(0.0..=1.0).contains(&z) {
        return 0.0;
    }
    30.0 * z * z * (1.0 - z) * (1.0 - z)
}

pub fn smoothstep_d2(z: f64) -> f64 {
    if !(0.0..=1.0).contains(&z) {
        return 0.0;
    }
    60.0 * z * (1.0 - z) * (1.0 - 2.0 * z)
}

/// Uniformly spaced samples `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn symmetric(half_width: f64, len: usize) -> Self {
        let step = 2.0 * half_width / (len - 1) as f64;
        Self { start: -half_width, step, len }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Index of the interval containing `x` and the local coordinate in `[0, 1]`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.start) / self.step;
        let i = (s.floor().max(0.0) as usize).min(self.len - 2);
        (i, s - i as f64)
    }
}

/// Cubic Hermite interpolation on a uniform grid from values and slopes.
pub fn hermite(grid: &UniformGrid, values: &[f64], slopes: &[f64], x: f64) -> (f64, f64) {
    let (i, t) = grid.locate(x);
    let h = grid.step;
    let (y0, y1) = (values[i], values[i + 1]);
    let (m0, m1) = (slopes[i] * h, slopes[i + 1] * h);
    let t2 = t * t;
    let t3 = t2 * t;
    let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * m1;
    let slope = ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * m1)
        / h;
    (value, slope)
}

/// Central differences in the interior, second-order one-sided at the ends.
pub fn gradient_1d(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let g = (values[1] - values[0]) / h;
            out.fill(g);
        }
        return out;
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    out
}
