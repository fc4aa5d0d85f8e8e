//! Volume-preserving mean curvature flow `V = κ − κ̄` for planar marker
//! fronts, and its exact reduction for concentric spheres in `ℝⁿ`.
//!
//! Normal velocities are measured along the normal pointing into Ω⁺, and a
//! marker moves by `−V n`: convex bumps retract, a lone circle is
//! stationary and nested rings shrink.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{dist, Point, Polyline, Shape};
use crate::numeric::spline::PeriodicSpline;
use crate::numeric::{pairwise_dot, pairwise_sum};

/// One or more closed marker loops, each with Ω⁻ on its left.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontCurve {
    pub components: Vec<Vec<Point>>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    /// Area (or volume) of Ω⁻.
    pub area: f64,
    /// Length (or surface measure) of the front.
    pub length: f64,
    pub kbar: f64,
    pub lambda0: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowDiagnostics {
    pub rows: Vec<DiagnosticRow>,
}

impl FlowDiagnostics {
    /// Largest `|A(t) − A(0)| / A(0)` over the record.
    pub fn max_relative_area_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else { return 0.0 };
        self.rows
            .iter()
            .map(|r| ((r.area - first.area) / first.area).abs())
            .fold(0.0, f64::max)
    }
}

/// Discrete geometry of a single marker loop.
struct LoopGeometry {
    curvature: Vec<f64>,
    normal: Vec<Point>,
    weight: Vec<f64>,
}

fn loop_geometry(markers: &[Point]) -> LoopGeometry {
    let n = markers.len();
    let mut curvature = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    for i in 0..n {
        let a = markers[(i + n - 1) % n];
        let b = markers[i];
        let c = markers[(i + 1) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        let denom = dist(a, b) * dist(b, c) * dist(a, c);
        curvature.push(if denom > 0.0 { 2.0 * cross / denom } else { 0.0 });
        let t = [c[0] - a[0], c[1] - a[1]];
        let len = t[0].hypot(t[1]);
        normal.push(if len > 0.0 { [t[1] / len, -t[0] / len] } else { [0.0, 0.0] });
        weight.push(0.5 * len);
    }
    LoopGeometry { curvature, normal, weight }
}

impl FrontCurve {
    pub fn new(components: Vec<Vec<Point>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("front has no components".into()));
        }
        if let Some(k) = components.iter().position(|c| c.len() < 4) {
            return Err(Error::InvalidInput(format!("component {k} has fewer than 4 markers")));
        }
        let curve = Self { components, t: 0.0 };
        if !(curve.area() > 0.0) {
            return Err(Error::Geometry(format!("enclosed area {} is not positive", curve.area())));
        }
        Ok(curve)
    }

    /// `n` equally spaced counterclockwise markers on a closed shape.
    pub fn from_shape(shape: &Shape, n: usize) -> Result<Self> {
        shape.validate()?;
        if !shape.is_closed() {
            return Err(Error::Geometry("marker fronts need a closed shape".into()));
        }
        Self::new(vec![shape.markers(n)])
    }

    /// Concentric circles `radii` with the orientation signs used by
    /// [`RadialState`]: `+1` loops run counterclockwise, `−1` clockwise.
    pub fn concentric(radii: &[f64], signs: &[i8], n: usize) -> Result<Self> {
        if radii.len() != signs.len() {
            return Err(Error::ShapeMismatch(format!("{} radii but {} signs", radii.len(), signs.len())));
        }
        let comps = radii
            .iter()
            .zip(signs)
            .map(|(&r, &s)| {
                let mut m = Shape::circle(r).markers(n);
                if s < 0 {
                    m.reverse();
                }
                m
            })
            .collect();
        Self::new(comps)
    }

    pub fn marker_count(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    pub fn polylines(&self) -> Vec<Polyline> {
        self.components.iter().map(|c| Polyline::closed(c.clone())).collect()
    }

    /// Signed area of Ω⁻ (clockwise holes subtract).
    pub fn area(&self) -> f64 {
        let parts: Vec<f64> = self.polylines().iter().map(Polyline::signed_area).collect();
        pairwise_sum(&parts)
    }

    pub fn length(&self) -> f64 {
        let parts: Vec<f64> = self.polylines().iter().map(Polyline::length).collect();
        pairwise_sum(&parts)
    }

    pub fn min_spacing(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| (0..c.len()).map(move |i| dist(c[i], c[(i + 1) % c.len()])))
            .fold(f64::INFINITY, f64::min)
    }

    /// Per-loop marker curvatures (three-point circumcircle, signed).
    pub fn curvatures(&self) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| loop_geometry(c).curvature).collect()
    }

    /// Length-weighted curvature average over every component.
    pub fn mean_curvature(&self) -> f64 {
        let geo: Vec<LoopGeometry> = self.components.iter().map(|c| loop_geometry(c)).collect();
        global_mean(&geo)
    }

    pub fn diagnostics(&self, sigma: f64) -> DiagnosticRow {
        let kbar = self.mean_curvature();
        DiagnosticRow { t: self.t, area: self.area(), length: self.length(), kbar, lambda0: kbar / sigma }
    }

    /// First pair of non-adjacent crossing segments, if any.
    pub fn find_self_intersection(&self) -> Option<(usize, usize)> {
        let mut segs = Vec::with_capacity(self.marker_count());
        for (k, c) in self.components.iter().enumerate() {
            for i in 0..c.len() {
                segs.push((k, i, c[i], c[(i + 1) % c.len()]));
            }
        }
        let cell = segs.iter().map(|s| dist(s.2, s.3)).fold(0.0, f64::max).max(1e-12);
        let key = |p: Point| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (idx, s) in segs.iter().enumerate() {
            let (a, b) = (key(s.2), key(s.3));
            for x in a.0.min(b.0)..=a.0.max(b.0) {
                for y in a.1.min(b.1)..=a.1.max(b.1) {
                    buckets.entry((x, y)).or_default().push(idx);
                }
            }
        }
        let mut keys: Vec<_> = buckets.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let members = &buckets[&key];
            for (m, &p) in members.iter().enumerate() {
                for &q in &members[m + 1..] {
                    let (sp, sq) = (&segs[p], &segs[q]);
                    if sp.0 == sq.0 {
                        let n = self.components[sp.0].len();
                        if (sp.1 + 1) % n == sq.1 || (sq.1 + 1) % n == sp.1 {
                            continue;
                        }
                    }
                    if segments_cross(sp.2, sp.3, sq.2, sq.3) {
                        return Some((p.min(q), p.max(q)));
                    }
                }
            }
        }
        None
    }
}

fn global_mean(geo: &[LoopGeometry]) -> f64 {
    let num: Vec<f64> = geo.iter().map(|g| pairwise_dot(&g.curvature, &g.weight)).collect();
    let den: Vec<f64> = geo.iter().map(|g| pairwise_sum(&g.weight)).collect();
    pairwise_sum(&num) / pairwise_sum(&den)
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Per-marker normal velocity `κ_i − κ̄`, with κ̄ the global
/// length-weighted curvature average.
pub fn vpmcf_velocity(c: &FrontCurve) -> Result<Vec<Vec<f64>>> {
    if let Some((first, second)) = c.find_self_intersection() {
        return Err(Error::Geometry(format!("front self-intersects (segments {first} and {second})")));
    }
    let geo: Vec<LoopGeometry> = c.components.iter().map(|m| loop_geometry(m)).collect();
    let kbar = global_mean(&geo);
    Ok(geo.into_iter().map(|g| g.curvature.into_iter().map(|k| k - kbar).collect()).collect())
}

/// Explicit Euler step along the normals followed by redistribution to
/// uniform arclength.
pub fn step_front(c: &FrontCurve, dt: f64) -> Result<FrontCurve> {
    let h = c.min_spacing();
    let limit = 0.25 * h * h;
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepSize { dt, limit });
    }
    let velocity = vpmcf_velocity(c)?;
    let mut components = Vec::with_capacity(c.components.len());
    for (markers, v) in c.components.iter().zip(&velocity) {
        let geo = loop_geometry(markers);
        let moved: Vec<Point> = markers
            .iter()
            .zip(v)
            .zip(&geo.normal)
            .map(|((p, vi), n)| [p[0] - dt * vi * n[0], p[1] - dt * vi * n[1]])
            .collect();
        components.push(redistribute(&moved)?);
    }
    let next = FrontCurve { components, t: c.t + dt };
    if let Some((first, second)) = next.find_self_intersection() {
        return Err(Error::SelfIntersect { first, second });
    }
    Ok(next)
}

/// Resamples a closed loop at equal spline arclength, keeping the count.
pub fn redistribute(markers: &[Point]) -> Result<Vec<Point>> {
    let spline = PeriodicSpline::through(markers)
        .ok_or_else(|| Error::Geometry("coincident markers during redistribution".into()))?;
    let n = markers.len();
    let period = spline.period();
    Ok((0..n).map(|i| spline.eval(period * i as f64 / n as f64)).collect())
}

/// Recorded evolution of a marker front.
#[derive(Debug, Clone)]
pub struct FrontRun {
    pub final_curve: FrontCurve,
    pub diagnostics: FlowDiagnostics,
    pub snapshots: Vec<FrontCurve>,
}

/// Steps `c` to `t_end` with step `dt` (the last step is shortened),
/// recording diagnostics every `record_every` steps and at the end.
pub fn evolve_front(c: &FrontCurve, dt: f64, t_end: f64, record_every: usize, sigma: f64) -> Result<FrontRun> {
    evolve_front_until(c, dt, t_end, record_every, sigma, &[])
}

/// As [`evolve_front`], also snapshotting the first state at or after each
/// of `snapshot_times` (landing exactly on them).
pub fn evolve_front_until(
    c: &FrontCurve,
    dt: f64,
    t_end: f64,
    record_every: usize,
    sigma: f64,
    snapshot_times: &[f64],
) -> Result<FrontRun> {
    if !(t_end >= c.t) {
        return Err(Error::InvalidInput(format!("t_end = {t_end} precedes t = {}", c.t)));
    }
    let every = record_every.max(1);
    let mut stops: Vec<f64> = snapshot_times.iter().copied().filter(|&s| s >= c.t && s <= t_end).collect();
    stops.sort_by(f64::total_cmp);
    let mut next_stop = 0;
    let mut curve = c.clone();
    let mut diagnostics = FlowDiagnostics { rows: vec![curve.diagnostics(sigma)] };
    let mut snapshots = Vec::new();
    while next_stop < stops.len() && stops[next_stop] <= curve.t {
        snapshots.push(curve.clone());
        next_stop += 1;
    }
    let mut steps = 0usize;
    let tol = 1e-12 * t_end.abs().max(1.0);
    while curve.t < t_end - tol {
        let target = stops.get(next_stop).copied().unwrap_or(t_end).min(t_end);
        let h = (target - curve.t).min(dt);
        curve = step_front(&curve, h)?;
        if (curve.t - target).abs() <= tol {
            curve.t = target;
        }
        steps += 1;
        if steps.is_multiple_of(every) {
            diagnostics.rows.push(curve.diagnostics(sigma));
        }
        while next_stop < stops.len() && stops[next_stop] <= curve.t + tol {
            snapshots.push(curve.clone());
            next_stop += 1;
        }
    }
    if diagnostics.rows.last().map(|r| r.t) != Some(curve.t) {
        diagnostics.rows.push(curve.diagnostics(sigma));
    }
    Ok(FrontRun { final_curve: curve, diagnostics, snapshots })
}

/// Concentric spheres `|x| = R_i` in `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub n: usize,
    pub radii: Vec<f64>,
    /// `+1`: Ω⁺ just outside `R_i`; `−1`: Ω⁺ just inside.
    pub signs: Vec<i8>,
    pub t: f64,
}

/// Volume of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

impl RadialState {
    pub fn new(n: usize, radii: Vec<f64>, signs: Vec<i8>) -> Result<Self> {
        let s = Self { n, radii, signs, t: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("dimension must be ≥ 2, got {}", self.n)));
        }
        if self.radii.is_empty() {
            return Err(Error::EmptyInput("no radii".into()));
        }
        if self.radii.len() != self.signs.len() {
            return Err(Error::ShapeMismatch(format!("{} radii but {} signs", self.radii.len(), self.signs.len())));
        }
        if !(self.radii[0] > 0.0) || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("radii must be positive and strictly increasing".into()));
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) || self.signs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("signs must be ±1 and alternate".into()));
        }
        Ok(())
    }

    /// `K̄ = (n−1) Σ ς_j R_j^{n−2} / Σ R_j^{n−1}`.
    pub fn mean_curvature(&self) -> f64 {
        let n = self.n as i32;
        let num: Vec<f64> = self.radii.iter().zip(&self.signs).map(|(r, &s)| s as f64 * r.powi(n - 2)).collect();
        let den: Vec<f64> = self.radii.iter().map(|r| r.powi(n - 1)).collect();
        (n - 1) as f64 * pairwise_sum(&num) / pairwise_sum(&den)
    }

    /// Volume of Ω⁻, `Σ ς_i ω_n R_iⁿ`.
    pub fn volume(&self) -> f64 {
        let w = unit_ball_volume(self.n);
        let parts: Vec<f64> = self.radii.iter().zip(&self.signs).map(|(r, &s)| s as f64 * w * r.powi(self.n as i32)).collect();
        pairwise_sum(&parts)
    }

    pub fn surface(&self) -> f64 {
        let s = self.n as f64 * unit_ball_volume(self.n);
        let parts: Vec<f64> = self.radii.iter().map(|r| s * r.powi(self.n as i32 - 1)).collect();
        pairwise_sum(&parts)
    }

    pub fn diagnostics(&self, sigma: f64) -> DiagnosticRow {
        let kbar = self.mean_curvature();
        DiagnosticRow { t: self.t, area: self.volume(), length: self.surface(), kbar, lambda0: kbar / sigma }
    }
}

/// `Ṙ_i = −(n−1)/R_i + ς_i K̄`.
pub fn radial_rhs(s: &RadialState) -> Vec<f64> {
    let kbar = s.mean_curvature();
    let m = (s.n - 1) as f64;
    s.radii.iter().zip(&s.signs).map(|(r, &sg)| -m / r + sg as f64 * kbar).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseEvent {
    pub time: f64,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct RadialRun {
    /// States at every outer step, starting with the initial one.
    pub trajectory: Vec<RadialState>,
    /// Rates `Ṙ` matching each trajectory entry.
    pub rates: Vec<Vec<f64>>,
    pub diagnostics: FlowDiagnostics,
    pub collapse: Option<CollapseEvent>,
}

/// Classical RK4 on [`radial_rhs`] up to `t_end`.
///
/// Each outer step of size `dt` is split into sub-steps no longer than
/// `0.01 R_min² / (n−1)`, which keeps the integration accurate as a ring
/// closes. Integration halts when a radius, or its one-step prediction
/// through `d(R²)/dt`, drops below `10·dt`.
pub fn radial_integrate(s: &RadialState, t_end: f64, dt: f64, sigma: f64) -> Result<RadialRun> {
    s.validate()?;
    if !(dt > 0.0) || !(t_end >= s.t) {
        return Err(Error::InvalidInput(format!("need dt > 0 and t_end ≥ t, got dt = {dt}, t_end = {t_end}")));
    }
    let mut state = s.clone();
    let mut run = RadialRun {
        trajectory: vec![state.clone()],
        rates: vec![radial_rhs(&state)],
        diagnostics: FlowDiagnostics { rows: vec![state.diagnostics(sigma)] },
        collapse: None,
    };
    let tol = 1e-12 * t_end.abs().max(1.0);
    while state.t < t_end - tol {
        // R² is nearly linear in t as a ring closes; predicting it one step
        // ahead keeps steps off the singular collapse time.
        let rates = radial_rhs(&state);
        let guard = 10.0 * dt;
        let closing = |i: usize| {
            let r = state.radii[i];
            r < guard || r * r + 2.0 * dt * r * rates[i] < guard * guard
        };
        if let Some(index) = (0..state.radii.len()).find(|&i| closing(i)) {
            run.collapse = Some(CollapseEvent { time: state.t, index });
            break;
        }
        let h = dt.min(t_end - state.t);
        let rmin = state.radii.iter().copied().fold(f64::INFINITY, f64::min);
        let sub_limit = 0.01 * rmin * rmin / (state.n - 1) as f64;
        let subs = (h / sub_limit).ceil().max(1.0) as usize;
        let hs = h / subs as f64;
        let t0 = state.t;
        for _ in 0..subs {
            state = rk4_step(&state, hs);
        }
        state.t = t0 + h;
        if state.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            let index = state.radii.iter().position(|r| !(r.is_finite() && *r > 0.0)).unwrap_or(0);
            run.collapse = Some(CollapseEvent { time: t0, index });
            break;
        }
        run.rates.push(radial_rhs(&state));
        run.diagnostics.rows.push(state.diagnostics(sigma));
        run.trajectory.push(state.clone());
    }
    if run.collapse.is_none() && state.t >= t_end - tol {
        if let Some(index) = state.radii.iter().position(|&r| r < 10.0 * dt) {
            run.collapse = Some(CollapseEvent { time: state.t, index });
        }
    }
    Ok(run)
}

fn rk4_step(s: &RadialState, h: f64) -> RadialState {
    let shifted = |k: &[f64], c: f64| RadialState {
        radii: s.radii.iter().zip(k).map(|(r, k)| r + c * k).collect(),
        ..s.clone()
    };
    let k1 = radial_rhs(s);
    let k2 = radial_rhs(&shifted(&k1, 0.5 * h));
    let k3 = radial_rhs(&shifted(&k2, 0.5 * h));
    let k4 = radial_rhs(&shifted(&k3, h));
    let radii = (0..s.radii.len())
        .map(|i| s.radii[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    RadialState { radii, t: s.t + h, ..s.clone() }
}
