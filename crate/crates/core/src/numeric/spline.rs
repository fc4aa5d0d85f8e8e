//! Periodic cubic splines for closed curves.

use super::tridiag::solve_cyclic;

/// Closed planar curve interpolated by a periodic cubic spline in a
/// cumulative chord-length parameter.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    period: f64,
    points: Vec<[f64; 2]>,
    second: [Vec<f64>; 2],
}

impl PeriodicSpline {
    /// Returns `None` for fewer than three points or coincident neighbours.
    pub fn through(points: &[[f64; 2]]) -> Option<Self> {
        let n = points.len();
        if n < 3 {
            return None;
        }
        let mut knots = Vec::with_capacity(n);
        let mut h = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            knots.push(acc);
            let a = points[i];
            let b = points[(i + 1) % n];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if len == 0.0 {
                return None;
            }
            h.push(len);
            acc += len;
        }
        let period = acc;
        // Periodic second-derivative system: for node i,
        // h[i-1] M[i-1] + 2(h[i-1]+h[i]) M[i] + h[i] M[i+1] = 6(Δ_i/h_i − Δ_{i−1}/h_{i−1}).
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * (h[(i + n - 1) % n] + h[i])).collect();
        let lower: Vec<f64> = (1..n).map(|i| h[i - 1]).collect();
        let upper: Vec<f64> = (0..n - 1).map(|i| h[i]).collect();
        let mut second = [vec![0.0; n], vec![0.0; n]];
        for (c, out) in second.iter_mut().enumerate() {
            let rhs: Vec<f64> = (0..n)
                .map(|i| {
                    let prev = (i + n - 1) % n;
                    let next = (i + 1) % n;
                    6.0 * ((points[next][c] - points[i][c]) / h[i]
                        - (points[i][c] - points[prev][c]) / h[prev])
                })
                .collect();
            *out = solve_cyclic(&lower, &diag, &upper, h[n - 1], h[n - 1], &rhs)?;
        }
        Some(Self { knots, period, points: points.to_vec(), second })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, s: f64) -> [f64; 2] {
        let n = self.points.len();
        let s = s.rem_euclid(self.period);
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let j = (i + 1) % n;
        let h = if j == 0 { self.period - self.knots[i] } else { self.knots[j] - self.knots[i] };
        let a = (s - self.knots[i]) / h;
        let b = 1.0 - a;
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate() {
            let m = &self.second[c];
            *o = b * self.points[i][c]
                + a * self.points[j][c]
                + ((b * b * b - b) * m[i] + (a * a * a - a) * m[j]) * h * h / 6.0;
        }
        out
    }
}
