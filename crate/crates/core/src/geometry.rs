//! Signed distances, curvature and tubular coordinates for planar fronts.
//!
//! Sign convention: `d < 0` inside Ω⁻ (the bounded phase), `d > 0` in Ω⁺.
//! Closed curves are traversed counterclockwise so Ω⁻ lies on the left.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, pairwise_sum};

pub type Point = [f64; 2];

/// Uniform cell-centred grid on `[−lx/2, lx/2] × [−ly/2, ly/2]`.
///
/// `ny == 1` describes a one-dimensional grid along `x` (all `y = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let g = Self { nx, ny, lx, ly };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[−half, half]²` with `n × n` cells.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        Self::new(n, n, 2.0 * half, 2.0 * half)
    }

    /// One-dimensional grid on `[−half, half]`.
    pub fn line(n: usize, half: f64) -> Result<Self> {
        Self::new(n, 1, 2.0 * half, 2.0 * half)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny == 0 {
            return Err(Error::InvalidInput(format!("grid needs nx ≥ 2 and ny ≥ 1, got {}×{}", self.nx, self.ny)));
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return Err(Error::InvalidInput(format!("grid extents must be positive, got {} × {}", self.lx, self.ly)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        if self.ny == 1 {
            1
        } else {
            2
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Smallest spacing among active directions.
    pub fn h(&self) -> f64 {
        if self.dim() == 1 {
            self.hx()
        } else {
            self.hx().min(self.hy())
        }
    }

    pub fn cell_volume(&self) -> f64 {
        if self.dim() == 1 {
            self.hx()
        } else {
            self.hx() * self.hy()
        }
    }

    pub fn domain_measure(&self) -> f64 {
        if self.dim() == 1 {
            self.lx
        } else {
            self.lx * self.ly
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.lx + (i as f64 + 0.5) * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        if self.dim() == 1 {
            0.0
        } else {
            -0.5 * self.ly + (j as f64 + 0.5) * self.hy()
        }
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        [self.x(i), self.y(j)]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Distance from a box `[lo, hi]` to the domain boundary (negative if it
    /// pokes out). In 1D only the `x` extent counts.
    pub fn margin(&self, lo: Point, hi: Point) -> f64 {
        let mx = (0.5 * self.lx - hi[0]).min(lo[0] + 0.5 * self.lx);
        if self.dim() == 1 {
            mx
        } else {
            mx.min((0.5 * self.ly - hi[1]).min(lo[1] + 0.5 * self.ly))
        }
    }
}

/// Open or closed chain of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Polyline {
    pub fn closed(points: Vec<Point>) -> Self {
        Self { points, closed: true }
    }

    pub fn open(points: Vec<Point>) -> Self {
        Self { points, closed: false }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 1 { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        let parts: Vec<f64> = self.segments().map(|(a, b)| dist(a, b)).collect();
        pairwise_sum(&parts)
    }

    /// Shoelace area, positive for counterclockwise loops. Zero when open.
    pub fn signed_area(&self) -> f64 {
        if !self.closed {
            return 0.0;
        }
        let parts: Vec<f64> = self.segments().map(|(a, b)| a[0] * b[1] - b[0] * a[1]).collect();
        0.5 * pairwise_sum(&parts)
    }

    /// Distance from `p` to the nearest segment (or the lone vertex).
    pub fn distance_to(&self, p: Point) -> f64 {
        if self.points.len() == 1 {
            return dist(p, self.points[0]);
        }
        self.segments().map(|(a, b)| dist(p, closest_on_segment(p, a, b))).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle { center: Point, radius: f64 },
    /// Axis-aligned ellipse with semi-axes `a` (along x) and `b` (along y).
    Ellipse { center: Point, a: f64, b: f64 },
    /// Closed polygon, vertices counterclockwise.
    Polygon { vertices: Vec<Point> },
    /// Axis-aligned square of side `side` with quarter-circle corners.
    RoundedSquare { center: Point, side: f64, corner: f64 },
    /// Vertical line `x = offset`; Ω⁻ is `x < offset`.
    Line { offset: f64 },
}

impl Shape {
    pub fn circle(radius: f64) -> Self {
        Shape::Circle { center: [0.0, 0.0], radius }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Shape::Ellipse { center: [0.0, 0.0], a, b }
    }

    /// Polygon through `vertices`, reoriented counterclockwise if needed.
    pub fn polygon(mut vertices: Vec<Point>) -> Self {
        if Polyline::closed(vertices.clone()).signed_area() < 0.0 {
            vertices.reverse();
        }
        Shape::Polygon { vertices }
    }

    /// Centred axis-aligned square polygon.
    pub fn square(side: f64) -> Self {
        let s = 0.5 * side;
        Shape::polygon(vec![[-s, -s], [s, -s], [s, s], [-s, s]])
    }

    pub fn rounded_square(side: f64, corner: f64) -> Self {
        Shape::RoundedSquare { center: [0.0, 0.0], side, corner }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Circle { radius, .. } => *radius > 0.0,
            Shape::Ellipse { a, b, .. } => *a > 0.0 && *b > 0.0,
            Shape::Polygon { vertices } => vertices.len() >= 3 && Polyline::closed(vertices.clone()).signed_area() > 0.0,
            Shape::RoundedSquare { side, corner, .. } => *corner > 0.0 && 2.0 * corner <= *side,
            Shape::Line { offset } => offset.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!("degenerate shape {self:?}")))
        }
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self, Shape::Line { .. })
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Shape::Circle { center: c, radius: r } => ([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]),
            Shape::Ellipse { center: c, a, b } => ([c[0] - a, c[1] - b], [c[0] + a, c[1] + b]),
            Shape::Polygon { vertices } => vertices.iter().fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), v| ([lo[0].min(v[0]), lo[1].min(v[1])], [hi[0].max(v[0]), hi[1].max(v[1])]),
            ),
            Shape::RoundedSquare { center: c, side, .. } => {
                let s = 0.5 * side;
                ([c[0] - s, c[1] - s], [c[0] + s, c[1] + s])
            }
            Shape::Line { offset } => ([*offset, f64::NEG_INFINITY], [*offset, f64::INFINITY]),
        }
    }

    /// Signed distance at `p`.
    pub fn distance(&self, p: Point) -> f64 {
        match self {
            Shape::Circle { center, radius } => dist(p, *center) - radius,
            Shape::Ellipse { center, a, b } => {
                let q = [p[0] - center[0], p[1] - center[1]];
                let (_, d) = ellipse_closest(*a, *b, q);
                if (q[0] / a).powi(2) + (q[1] / b).powi(2) < 1.0 {
                    -d
                } else {
                    d
                }
            }
            Shape::Polygon { vertices } => {
                let d = Polyline::closed(vertices.clone()).distance_to(p);
                if winding_number(vertices, p) != 0 {
                    -d
                } else {
                    d
                }
            }
            Shape::RoundedSquare { center, side, corner } => {
                let inner = 0.5 * side - corner;
                let q = [(p[0] - center[0]).abs() - inner, (p[1] - center[1]).abs() - inner];
                let outside = q[0].max(0.0).hypot(q[1].max(0.0));
                outside + q[0].max(q[1]).min(0.0) - corner
            }
            Shape::Line { offset } => p[0] - offset,
        }
    }

    /// Nearest point of the front to `p`.
    pub fn closest_point(&self, p: Point) -> Point {
        match self {
            Shape::Circle { center, radius } => {
                let r = dist(p, *center);
                if r == 0.0 {
                    return [center[0] + radius, center[1]];
                }
                [center[0] + radius * (p[0] - center[0]) / r, center[1] + radius * (p[1] - center[1]) / r]
            }
            Shape::Ellipse { center, a, b } => {
                let (x, _) = ellipse_closest(*a, *b, [p[0] - center[0], p[1] - center[1]]);
                [center[0] + x[0], center[1] + x[1]]
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| closest_on_segment(p, vertices[i], vertices[(i + 1) % n]))
                    .min_by(|x, y| dist(p, *x).total_cmp(&dist(p, *y)))
                    .unwrap_or(p)
            }
            Shape::RoundedSquare { center, side, corner } => {
                let inner = 0.5 * side - corner;
                let q = [p[0] - center[0], p[1] - center[1]];
                let clamp = [q[0].clamp(-inner, inner), q[1].clamp(-inner, inner)];
                let off = [q[0] - clamp[0], q[1] - clamp[1]];
                let r = off[0].hypot(off[1]);
                let foot = if r > 0.0 {
                    [clamp[0] + corner * off[0] / r, clamp[1] + corner * off[1] / r]
                } else {
                    // Inside the inner square: push to the nearest flat side.
                    let gaps = [inner - q[0], q[0] + inner, inner - q[1], q[1] + inner];
                    let k = (0..4).min_by(|&i, &j| gaps[i].total_cmp(&gaps[j])).unwrap_or(0);
                    let s = 0.5 * side;
                    match k {
                        0 => [s, q[1]],
                        1 => [-s, q[1]],
                        2 => [q[0], s],
                        _ => [q[0], -s],
                    }
                };
                [center[0] + foot[0], center[1] + foot[1]]
            }
            Shape::Line { offset } => [*offset, p[1]],
        }
    }

    /// Outward unit normal at a front point (or at the foot of `p`).
    pub fn normal(&self, p: Point) -> Point {
        let foot = self.closest_point(p);
        match self {
            Shape::Circle { center, .. } => unit([foot[0] - center[0], foot[1] - center[1]]),
            Shape::Ellipse { center, a, b } => {
                unit([(foot[0] - center[0]) / (a * a), (foot[1] - center[1]) / (b * b)])
            }
            Shape::Line { .. } => [1.0, 0.0],
            _ => {
                let off = [p[0] - foot[0], p[1] - foot[1]];
                if off[0].hypot(off[1]) > 1e-12 {
                    let s = self.distance(p).signum();
                    unit([s * off[0], s * off[1]])
                } else {
                    // On the front: finite-difference gradient of d.
                    let e = 1e-7;
                    unit([
                        self.distance([p[0] + e, p[1]]) - self.distance([p[0] - e, p[1]]),
                        self.distance([p[0], p[1] + e]) - self.distance([p[0], p[1] - e]),
                    ])
                }
            }
        }
    }

    /// Curvature of the front at its point nearest to `p` (positive for
    /// convex Ω⁻).
    pub fn curvature(&self, p: Point) -> f64 {
        match self {
            Shape::Circle { radius, .. } => 1.0 / radius,
            Shape::Ellipse { center, a, b } => {
                let foot = self.closest_point(p);
                let t = ((foot[1] - center[1]) / b).atan2((foot[0] - center[0]) / a);
                ellipse_curvature(*a, *b, t)
            }
            Shape::Polygon { .. } | Shape::Line { .. } => 0.0,
            Shape::RoundedSquare { center, side, corner } => {
                let inner = 0.5 * side - corner;
                let foot = self.closest_point(p);
                let q = [(foot[0] - center[0]).abs(), (foot[1] - center[1]).abs()];
                if q[0] > inner + 1e-12 && q[1] > inner + 1e-12 {
                    1.0 / corner
                } else {
                    0.0
                }
            }
        }
    }

    /// Smallest radius of curvature. For polygons, the smallest circumradius
    /// of three consecutive vertices.
    pub fn min_curvature_radius(&self) -> f64 {
        match self {
            Shape::Circle { radius, .. } => *radius,
            Shape::Ellipse { a, b, .. } => (b * b / a).min(a * a / b),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| circumradius(vertices[(i + n - 1) % n], vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::RoundedSquare { corner, .. } => *corner,
            Shape::Line { .. } => f64::INFINITY,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Circle { radius, .. } => PI * radius * radius,
            Shape::Ellipse { a, b, .. } => PI * a * b,
            Shape::Polygon { vertices } => Polyline::closed(vertices.clone()).signed_area(),
            Shape::RoundedSquare { side, corner, .. } => side * side - (4.0 - PI) * corner * corner,
            Shape::Line { .. } => f64::INFINITY,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Shape::Circle { radius, .. } => 2.0 * PI * radius,
            Shape::Ellipse { a, b, .. } => {
                gauss_legendre(|t| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt(), 0.0, 2.0 * PI, 64)
            }
            Shape::Polygon { vertices } => Polyline::closed(vertices.clone()).length(),
            Shape::RoundedSquare { side, corner, .. } => 4.0 * (side - 2.0 * corner) + 2.0 * PI * corner,
            Shape::Line { .. } => f64::INFINITY,
        }
    }

    /// Average of the curvature sum over the front in dimension `dim`.
    /// Every simple closed planar curve turns by 2π; 1D fronts are flat.
    pub fn mean_curvature(&self, dim: usize) -> f64 {
        if dim == 1 || !self.is_closed() {
            0.0
        } else {
            2.0 * PI / self.perimeter()
        }
    }

    /// Point at fraction `t ∈ [0, 1)` of a natural counterclockwise
    /// parametrisation, with its speed `|X'(t)|`.
    fn param(&self, t: f64) -> (Point, f64) {
        let t = t.rem_euclid(1.0);
        match self {
            Shape::Circle { center, radius } => {
                let a = 2.0 * PI * t;
                ([center[0] + radius * a.cos(), center[1] + radius * a.sin()], 2.0 * PI * radius)
            }
            Shape::Ellipse { center, a, b } => {
                let s = 2.0 * PI * t;
                let speed = 2.0 * PI * (a * a * s.sin().powi(2) + b * b * s.cos().powi(2)).sqrt();
                ([center[0] + a * s.cos(), center[1] + b * s.sin()], speed)
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let total = self.perimeter();
                let mut s = t * total;
                for i in 0..n {
                    let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                    let len = dist(p, q);
                    if s <= len || i == n - 1 {
                        let f = (s / len).min(1.0);
                        return ([p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])], total);
                    }
                    s -= len;
                }
                (vertices[0], total)
            }
            Shape::RoundedSquare { center, side, corner } => {
                let total = self.perimeter();
                let flat = side - 2.0 * corner;
                let arc = 0.5 * PI * corner;
                let inner = 0.5 * side - corner;
                let mut s = t * total;
                // Start at (side/2, −inner), go up the right side.
                let arc_centers = [[inner, inner], [-inner, inner], [-inner, -inner], [inner, -inner]];
                for k in 0..4 {
                    let angle0 = 0.5 * PI * k as f64;
                    let (dir, normal) = ([-(angle0.sin()), angle0.cos()], [angle0.cos(), angle0.sin()]);
                    if s <= flat {
                        let base = [arc_centers[(k + 3) % 4][0] + corner * normal[0], arc_centers[(k + 3) % 4][1] + corner * normal[1]];
                        return ([center[0] + base[0] + s * dir[0], center[1] + base[1] + s * dir[1]], total);
                    }
                    s -= flat;
                    if s <= arc || k == 3 {
                        let a = angle0 + (s / corner).min(0.5 * PI);
                        let c = arc_centers[k];
                        return ([center[0] + c[0] + corner * a.cos(), center[1] + c[1] + corner * a.sin()], total);
                    }
                    s -= arc;
                }
                unreachable!("parameter wrapped into [0, 1)")
            }
            Shape::Line { offset } => ([*offset, t], 1.0),
        }
    }

    /// `n` counterclockwise points equally spaced in arclength.
    pub fn markers(&self, n: usize) -> Vec<Point> {
        match self {
            Shape::Ellipse { .. } => {
                // Invert the arclength table of the eccentric-anomaly
                // parametrisation.
                let m = 64 * n.max(64);
                let mut cum = vec![0.0; m + 1];
                for k in 0..m {
                    let (t0, t1) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
                    cum[k + 1] = cum[k] + gauss_legendre(|t| self.param(t).1, t0, t1, 1);
                }
                let total = cum[m];
                let mut k = 0;
                (0..n)
                    .map(|i| {
                        let target = total * i as f64 / n as f64;
                        while cum[k + 1] < target {
                            k += 1;
                        }
                        let f = (target - cum[k]) / (cum[k + 1] - cum[k]);
                        self.param((k as f64 + f) / m as f64).0
                    })
                    .collect()
            }
            _ => (0..n).map(|i| self.param(i as f64 / n as f64).0).collect(),
        }
    }

    /// Quadrature samples of the front: `n` points with outward normals,
    /// curvatures and arclength weights summing to the perimeter.
    pub fn front_samples(&self, n: usize) -> Vec<FrontSample> {
        let mut s = 0.0;
        (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) / n as f64;
                let (point, speed) = self.param(t);
                let weight = speed / n as f64;
                let sample = FrontSample {
                    point,
                    normal: self.normal(point),
                    curvatures: vec![self.curvature(point)],
                    weight,
                    s: s + 0.5 * weight,
                };
                s += weight;
                sample
            })
            .collect()
    }

    /// Arclength coordinate `S(x)` of the foot point, measured
    /// counterclockwise from the parametrisation origin.
    pub fn arclength_of(&self, p: Point) -> f64 {
        let foot = self.closest_point(p);
        match self {
            Shape::Circle { center, radius } => {
                radius * (foot[1] - center[1]).atan2(foot[0] - center[0]).rem_euclid(2.0 * PI)
            }
            Shape::Ellipse { center, a, b } => {
                let t = ((foot[1] - center[1]) / b).atan2((foot[0] - center[0]) / a).rem_euclid(2.0 * PI);
                gauss_legendre(|s| (a * a * s.sin().powi(2) + b * b * s.cos().powi(2)).sqrt(), 0.0, t, 16)
            }
            Shape::Line { .. } => foot[1],
            _ => {
                let m = 8192;
                let pts: Vec<Point> = (0..m).map(|k| self.param(k as f64 / m as f64).0).collect();
                let line = Polyline::closed(pts);
                let mut acc = 0.0;
                let mut best = (f64::INFINITY, 0.0);
                for (a, b) in line.segments() {
                    let q = closest_on_segment(foot, a, b);
                    let d = dist(q, foot);
                    if d < best.0 {
                        best = (d, acc + dist(a, q));
                    }
                    acc += dist(a, b);
                }
                best.1
            }
        }
    }
}

/// Sampled signed distance on a grid.
#[derive(Debug, Clone)]
pub struct LevelFunction {
    pub grid: GridSpec,
    pub d: Vec<f64>,
    pub source: Option<Shape>,
    /// Tube half-width δ; the distance is smooth within `|d| < 3δ`.
    pub delta: f64,
}

/// Builds the signed distance of `shape` on `grid` with the default tube
/// width `δ = min(¼·min curvature radius, margin/3)`.
pub fn signed_distance(shape: &Shape, grid: &GridSpec) -> Result<LevelFunction> {
    signed_distance_with_delta(shape, grid, None)
}

pub fn signed_distance_with_delta(shape: &Shape, grid: &GridSpec, delta: Option<f64>) -> Result<LevelFunction> {
    grid.validate()?;
    shape.validate()?;
    let (lo, hi) = shape.bounding_box();
    let margin = grid.margin(lo, hi);
    if !(margin > 0.0) {
        return Err(Error::Geometry(format!("shape leaves the domain (margin {margin})")));
    }
    let curvature_radius = if grid.dim() == 1 { f64::INFINITY } else { shape.min_curvature_radius() };
    let delta = match delta {
        Some(d) => {
            if !(d > 0.0) || 3.0 * d > margin {
                return Err(Error::Geometry(format!("tube 3δ = {} does not fit the margin {margin}", 3.0 * d)));
            }
            if d >= curvature_radius {
                return Err(Error::Geometry(format!("δ = {d} exceeds the curvature radius {curvature_radius}")));
            }
            d
        }
        None => (0.25 * curvature_radius).min(margin / 3.0),
    };
    let mut d = vec![0.0; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            d[grid.index(i, j)] = shape.distance(grid.point(i, j));
        }
    }
    Ok(LevelFunction { grid: *grid, d, source: Some(shape.clone()), delta })
}

impl LevelFunction {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.d[self.grid.index(i, j)]
    }

    /// Signed distance at any point: exact when the source shape is known,
    /// bilinear otherwise.
    pub fn value(&self, p: Point) -> f64 {
        match &self.source {
            Some(shape) => shape.distance(p),
            None => self.bilinear(p),
        }
    }

    fn bilinear(&self, p: Point) -> f64 {
        let g = &self.grid;
        let fx = ((p[0] + 0.5 * g.lx) / g.hx() - 0.5).clamp(0.0, (g.nx - 1) as f64);
        let i = (fx.floor() as usize).min(g.nx - 2);
        let tx = fx - i as f64;
        if g.dim() == 1 {
            return (1.0 - tx) * self.d[i] + tx * self.d[i + 1];
        }
        let fy = ((p[1] + 0.5 * g.ly) / g.hy() - 0.5).clamp(0.0, (g.ny - 1) as f64);
        let j = (fy.floor() as usize).min(g.ny - 2);
        let ty = fy - j as f64;
        (1.0 - tx) * (1.0 - ty) * self.at(i, j)
            + tx * (1.0 - ty) * self.at(i + 1, j)
            + (1.0 - tx) * ty * self.at(i, j + 1)
            + tx * ty * self.at(i + 1, j + 1)
    }

    /// Central-difference gradient at an interior node.
    pub fn gradient_at(&self, i: usize, j: usize) -> Point {
        let g = &self.grid;
        let gx = (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * g.hx());
        if g.dim() == 1 {
            return [gx, 0.0];
        }
        [gx, (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * g.hy())]
    }

    /// `max ||∇_h d| − 1|` over interior nodes of the tube `|d| < 3δ`.
    pub fn eikonal_defect(&self) -> f64 {
        let g = &self.grid;
        let (jlo, jhi) = if g.dim() == 1 { (0, 1) } else { (1, g.ny - 1) };
        let mut worst: f64 = 0.0;
        for j in jlo..jhi {
            for i in 1..g.nx - 1 {
                if self.at(i, j).abs() < 3.0 * self.delta {
                    let [gx, gy] = self.gradient_at(i, j);
                    worst = worst.max((gx.hypot(gy) - 1.0).abs());
                }
            }
        }
        worst
    }

    /// `Δd` at a point within `5h` of the front, by the five-point stencil
    /// with the grid spacing.
    pub fn curvature_sum(&self, at: Point) -> Result<f64> {
        let h = self.grid.h();
        let d0 = self.value(at);
        if d0.abs() > 5.0 * h {
            return Err(Error::Geometry(format!("point {at:?} is {d0} away from the front, beyond 5h = {}", 5.0 * h)));
        }
        let hx = self.grid.hx();
        let mut lap = (self.value([at[0] + hx, at[1]]) - 2.0 * d0 + self.value([at[0] - hx, at[1]])) / (hx * hx);
        if self.grid.dim() == 2 {
            let hy = self.grid.hy();
            lap += (self.value([at[0], at[1] + hy]) - 2.0 * d0 + self.value([at[0], at[1] - hy])) / (hy * hy);
        }
        Ok(lap)
    }
}

/// `∏ (1 + r κ_i)`, the area element of the normal coordinates.
pub fn jacobian(r: f64, curvatures: &[f64]) -> Result<f64> {
    let mut product = 1.0;
    for &k in curvatures {
        let factor = 1.0 + r * k;
        if factor <= 0.0 {
            return Err(Error::ChartFold { r, factor });
        }
        product *= factor;
    }
    Ok(product)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSample {
    pub point: Point,
    pub normal: Point,
    pub curvatures: Vec<f64>,
    /// Arclength weight `ds` of this sample.
    pub weight: f64,
    /// Arclength coordinate of the sample.
    pub s: f64,
}

/// Normal coordinates `x = X₀(s) + r n(s)` around a front.
#[derive(Debug, Clone)]
pub struct TubularChart {
    pub front: Vec<FrontSample>,
    pub delta: f64,
    pub eps: f64,
}

impl TubularChart {
    pub fn new(front: Vec<FrontSample>, delta: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("chart needs δ > 0 and ε > 0, got δ = {delta}, ε = {eps}")));
        }
        let kmax = front
            .iter()
            .flat_map(|f| f.curvatures.iter().map(|k| k.abs()))
            .fold(0.0, f64::max);
        if delta * kmax >= 1.0 {
            return Err(Error::Geometry(format!("δ = {delta} is not below the minimal curvature radius {}", 1.0 / kmax)));
        }
        Ok(Self { front, delta, eps })
    }

    pub fn from_shape(shape: &Shape, samples: usize, delta: f64, eps: f64) -> Result<Self> {
        shape.validate()?;
        Self::new(shape.front_samples(samples), delta, eps)
    }

    /// `∬ g(ρ, s) ε J(ερ, s) dρ ds` over `|ρ| ≤ rho_half_width`.
    pub fn tube_integrate(&self, integrand: impl Fn(f64, f64) -> f64, rho_half_width: f64) -> Result<f64> {
        if self.eps * rho_half_width > self.delta * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "ε·ρ-width = {} exceeds δ = {}",
                self.eps * rho_half_width,
                self.delta
            )));
        }
        let eps = self.eps;
        let mut parts = Vec::with_capacity(self.front.len());
        for sample in &self.front {
            jacobian(-eps * rho_half_width, &sample.curvatures)?;
            jacobian(eps * rho_half_width, &sample.curvatures)?;
            let line = gauss_legendre(
                |rho| {
                    let j = sample.curvatures.iter().map(|k| 1.0 + eps * rho * k).product::<f64>();
                    integrand(rho, sample.s) * eps * j
                },
                -rho_half_width,
                rho_half_width,
                64,
            );
            parts.push(line * sample.weight);
        }
        Ok(pairwise_sum(&parts))
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn unit(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

pub(crate) fn closest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return a;
    }
    let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2;
    if t <= 0.0 {
        a
    } else if t >= 1.0 {
        b
    } else {
        [a[0] + t * ab[0], a[1] + t * ab[1]]
    }
}

/// Radius of the circle through three points (infinite when collinear).
pub fn circumradius(a: Point, b: Point, c: Point) -> f64 {
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    if cross == 0.0 {
        return f64::INFINITY;
    }
    dist(a, b) * dist(b, c) * dist(c, a) / (2.0 * cross.abs())
}

fn winding_number(vertices: &[Point], p: Point) -> i32 {
    let n = vertices.len();
    let mut wn = 0;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        let side = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Curvature of `(a cos t, b sin t)`.
pub fn ellipse_curvature(a: f64, b: f64, t: f64) -> f64 {
    a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5)
}

/// Closest point on the ellipse `(x/a)² + (y/b)² = 1` to `q` and its
/// distance, by robust bisection on the first-quadrant root equation.
fn ellipse_closest(a: f64, b: f64, q: Point) -> (Point, f64) {
    // Work with e0 ≥ e1 and q in the first quadrant.
    let swap = b > a;
    let (e0, e1) = if swap { (b, a) } else { (a, b) };
    let (y0, y1) = if swap { (q[1].abs(), q[0].abs()) } else { (q[0].abs(), q[1].abs()) };
    let (x0, x1) = if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1).powi(2);
                let sbar = ellipse_root(r0, z0, z1, g);
                (r0 * y0 / (sbar + r0), y1 / (sbar + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde = numer / denom;
            (e0 * xde, e1 * (1.0 - xde * xde).sqrt())
        } else {
            (e0, 0.0)
        }
    };
    let d = (x0 - y0).hypot(x1 - y1);
    let (px, py) = if swap { (x1, x0) } else { (x0, x1) };
    ([px.copysign(q[0]), py.copysign(q[1])], d)
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::square(200, 1.0).unwrap()
    }

    #[test]
    fn circle_examples() {
        let lf = signed_distance(&Shape::circle(0.7), &grid()).unwrap();
        assert!((lf.value([1.0, 0.0]) - 0.3).abs() < 1e-15);
        assert!((lf.value([0.0, 0.0]) + 0.7).abs() < 1e-15);
        let k = lf.curvature_sum([0.7, 0.0]).unwrap();
        assert!((k - 1.0 / 0.7).abs() < 1e-4, "{k}");
    }

    #[test]
    fn square_examples() {
        let sq = Shape::square(1.0);
        assert!((sq.distance([0.75, 0.0]) - 0.25).abs() < 1e-15);
        assert!((sq.distance([0.0, 0.0]) + 0.5).abs() < 1e-15);
        // Brute force over a dense boundary sample.
        let p = [0.9, 0.8];
        let brute = sq.markers(40_000).iter().map(|&m| dist(m, p)).fold(f64::INFINITY, f64::min);
        assert!((sq.distance(p) - brute).abs() < 1e-4);
        let lf = signed_distance(&sq, &grid()).unwrap();
        assert!(lf.curvature_sum([0.5, 0.0]).unwrap().abs() < 1e-10);
    }

    #[test]
    fn ellipse_distance_and_curvature() {
        let e = Shape::ellipse(1.2, 0.8);
        assert!(e.distance([1.2, 0.0]).abs() < 1e-14);
        assert!((e.distance([0.0, 0.0]) + 0.8).abs() < 1e-14);
        assert!((e.distance([2.0, 0.0]) - 0.8).abs() < 1e-14);
        // Brute-force check on off-axis points.
        let dense = e.markers(20_000);
        for &p in &[[1.3, 0.4], [-0.2, 0.5], [0.9, -0.9], [0.1, 0.05]] {
            let brute = dense.iter().map(|&m| dist(m, p)).fold(f64::INFINITY, f64::min);
            assert!((e.distance(p).abs() - brute).abs() < 1e-4, "{p:?}");
        }
        let g = GridSpec::square(600, 1.5).unwrap();
        let lf = signed_distance(&e, &g).unwrap();
        let k = lf.curvature_sum([1.2, 0.0]).unwrap();
        assert!((k - 1.875).abs() < 1e-3, "{k}");
        assert!((e.curvature([1.2, 0.0]) - 1.875).abs() < 1e-12);
    }

    #[test]
    fn curvature_sum_rejects_points_off_the_front() {
        let lf = signed_distance(&Shape::circle(0.7), &grid()).unwrap();
        assert!(matches!(lf.curvature_sum([0.0, 0.0]), Err(Error::Geometry(_))));
    }

    #[test]
    fn margin_is_enforced() {
        assert!(matches!(signed_distance(&Shape::circle(1.2), &grid()), Err(Error::Geometry(_))));
        assert!(matches!(
            signed_distance_with_delta(&Shape::circle(0.7), &grid(), Some(0.2)),
            Err(Error::Geometry(_))
        ));
        let lf = signed_distance(&Shape::circle(0.7), &grid()).unwrap();
        assert!((lf.delta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(jacobian(0.0, &[3.0, -7.0]).unwrap(), 1.0);
        assert!((jacobian(0.1, &[2.0]).unwrap() - 1.2).abs() < 1e-15);
        assert!((jacobian(0.1, &[1.0, 2.0]).unwrap() - 1.32).abs() < 1e-15);
        assert!(matches!(jacobian(-0.5, &[2.0]), Err(Error::ChartFold { .. })));
    }

    #[test]
    fn eikonal_in_tube() {
        for shape in [Shape::circle(0.7), Shape::ellipse(0.8, 0.6), Shape::rounded_square(1.2, 0.3)] {
            let lf = signed_distance(&shape, &grid()).unwrap();
            assert!(lf.eikonal_defect() <= 5.0 * lf.grid.h(), "{shape:?}");
        }
    }

    #[test]
    fn rounded_square_consistency() {
        let s = Shape::rounded_square(1.0, 0.25);
        for m in s.markers(400) {
            assert!(s.distance(m).abs() < 1e-12);
            assert!(dist(s.closest_point(m), m) < 1e-12);
        }
        let line = Polyline::closed(s.markers(4000));
        assert!((line.signed_area() - s.area()).abs() < 1e-5);
        assert!((line.length() - s.perimeter()).abs() < 1e-5);
    }

    #[test]
    fn markers_are_equally_spaced() {
        let m = Shape::ellipse(1.2, 0.8).markers(256);
        let gaps: Vec<f64> = (0..256).map(|i| dist(m[i], m[(i + 1) % 256])).collect();
        let mean = gaps.iter().sum::<f64>() / 256.0;
        assert!(gaps.iter().all(|g| (g / mean - 1.0).abs() < 1e-3));
        assert!(Polyline::closed(m).signed_area() > 0.0);
    }

    #[test]
    fn one_dimensional_grid() {
        let g = GridSpec::line(100, 1.0).unwrap();
        assert_eq!(g.dim(), 1);
        let lf = signed_distance(&Shape::circle(0.5), &g).unwrap();
        assert!((lf.at(99, 0) - (g.x(99) - 0.5)).abs() < 1e-15);
        let flat = signed_distance(&Shape::Line { offset: 0.0 }, &g).unwrap();
        assert!(flat.curvature_sum([0.0, 0.0]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn tube_integral_of_one_is_annulus_area() {
        let r = 0.7;
        let chart = TubularChart::from_shape(&Shape::circle(r), 256, 0.1, 0.05).unwrap();
        let area = chart.tube_integrate(|_, _| 1.0, 2.0).unwrap();
        assert!((area - 4.0 * PI * r * 0.1).abs() < 1e-12);
        // An odd weight integrates to zero against the symmetric tube.
        let odd = chart.tube_integrate(|rho, _| rho, 2.0).unwrap();
        assert!((odd - 2.0 * PI * r * 0.05 * 0.05 * 2.0 * 2.0f64.powi(3) / 3.0 / r).abs() < 1e-12);
    }
}
