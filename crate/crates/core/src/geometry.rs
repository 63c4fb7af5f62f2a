//! Boundary curves, sigmoid grading towards corners, and the shifted
//! equispaced parameter mesh.
//!
//! A [`Curve`] is a closed, counterclockwise chain of analytic arcs. Arc `j`
//! occupies the parameter interval `[T_j, T_{j+1}]` of `[0, 2 pi]`, with
//! interval lengths proportional to arc length. Grading composes each arc
//! with a polynomial sigmoid so that `x'(t)` vanishes to order `p - 1` at
//! every breakpoint.

use std::f64::consts::PI;
use std::sync::Arc as Shared;

use crate::error::{Error, Result};
use crate::integrate;

pub type Vec2 = [f64; 2];

const TWO_PI: f64 = 2.0 * PI;

/// Sigmoid polynomial order; `p >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigmoidParams {
    pub p: u32,
}

impl SigmoidParams {
    pub fn new(p: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidGeometry(format!("sigmoid order p = {p} must be at least 2")));
        }
        Ok(Self { p })
    }
}

impl Default for SigmoidParams {
    fn default() -> Self {
        Self { p: 3 }
    }
}

/// Graded parameter `w(s)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigmoid {
    pub w: f64,
    pub dw: f64,
    pub ddw: f64,
}

/// Sigmoid transform of `[lo, hi]` onto itself with all derivatives of
/// order `1..p` vanishing at both ends.
pub fn sigmoid(s: f64, lo: f64, hi: f64, p: u32) -> Result<Sigmoid> {
    if p < 2 {
        return Err(Error::InvalidGeometry(format!("sigmoid order p = {p} must be at least 2")));
    }
    if !(lo..=hi).contains(&s) || hi <= lo {
        return Err(Error::OutOfSegment { value: s, lo, hi });
    }
    Ok(sigmoid_unchecked(s, lo, hi, p))
}

fn sigmoid_unchecked(s: f64, lo: f64, hi: f64, p: u32) -> Sigmoid {
    let len = hi - lo;
    let pf = p as f64;
    let pi = p as i32;
    let c = 1.0 / pf - 0.5;
    let xi = (lo + hi - 2.0 * s) / len;
    let v = if s <= lo {
        0.0
    } else if s >= hi {
        1.0
    } else {
        (c * xi * xi * xi - xi / pf + 0.5).clamp(0.0, 1.0)
    };
    let dv = 2.0 / len * (1.0 / pf - 3.0 * c * xi * xi);
    let ddv = 24.0 * c * xi / (len * len);
    let u = 1.0 - v;
    let a = v.powi(pi);
    let b = u.powi(pi);
    let sum = a + b;
    let f = pf * v.powi(pi - 1) * u.powi(pi - 1) / (sum * sum);
    let df = pf * (pf - 1.0) * v.powi(pi - 2) * u.powi(pi - 2) * (u - v) / (sum * sum)
        - 2.0 * f * pf * (v.powi(pi - 1) - u.powi(pi - 1)) / sum;
    Sigmoid { w: lo + len * a / sum, dw: len * dv * f, ddw: len * (ddv * f + dv * dv * df) }
}

/// One analytic piece of a boundary, parametrized over `u in [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Arc {
    /// Straight segment from `a` to `b`.
    Line { a: Vec2, b: Vec2 },
    /// One side of the rounded square `|x1|^q + |x2|^q = r^q` between two
    /// diagonal points; `quarter` rotates the right-hand side by multiples of
    /// a quarter turn.
    LqSide { q: i32, radius: f64, quarter: u8 },
    /// Full circle, traversed counterclockwise from angle 0.
    Circle { center: Vec2, radius: f64 },
}

/// Point and first two derivatives with respect to the arc's own parameter.
type Jet = (Vec2, Vec2, Vec2);

impl Arc {
    fn eval(&self, u: f64) -> Jet {
        match *self {
            Arc::Line { a, b } => {
                let d = [b[0] - a[0], b[1] - a[1]];
                ([a[0] + u * d[0], a[1] + u * d[1]], d, [0.0, 0.0])
            }
            Arc::LqSide { q, radius, quarter } => {
                let c = radius * 0.5f64.powf(1.0 / q as f64);
                let y = -c + 2.0 * c * u;
                let s = y / radius;
                let sq = s.powi(q);
                let base = 1.0 - sq;
                let f = base.powf(1.0 / q as f64);
                let df = -s.powi(q - 1) * base.powf(1.0 / q as f64 - 1.0);
                let ddf = -(q - 1) as f64 * s.powi(q - 2) * base.powf(1.0 / q as f64 - 2.0);
                let p = [radius * f, y];
                let dp = [df * 2.0 * c, 2.0 * c];
                let ddp = [ddf / radius * 4.0 * c * c, 0.0];
                let rot = |v: Vec2| -> Vec2 {
                    match quarter % 4 {
                        0 => v,
                        1 => [-v[1], v[0]],
                        2 => [-v[0], -v[1]],
                        _ => [v[1], -v[0]],
                    }
                };
                (rot(p), rot(dp), rot(ddp))
            }
            Arc::Circle { center, radius } => {
                let th = TWO_PI * u;
                let (s, c) = th.sin_cos();
                let w = TWO_PI * radius;
                (
                    [center[0] + radius * c, center[1] + radius * s],
                    [-w * s, w * c],
                    [-w * TWO_PI * c, -w * TWO_PI * s],
                )
            }
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Arc::Line { a, b } => ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt(),
            Arc::Circle { radius, .. } => TWO_PI * radius,
            Arc::LqSide { .. } => {
                // The integrand is symmetric about u = 1/2 and sharply curved
                // near both ends; split to help the adaptive rule.
                let speed = |u: f64| {
                    let (_, d, _) = self.eval(u);
                    (d[0] * d[0] + d[1] * d[1]).sqrt()
                };
                2.0 * integrate::adaptive(speed, 0.0, 0.5, 1e-13)
            }
        }
    }
}

/// Graded boundary point: `x(t)`, `x'(t)`, `x''(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub x: Vec2,
    pub dx: Vec2,
    pub ddx: Vec2,
}

impl CurvePoint {
    /// Jacobian `|x'(t)|`.
    pub fn speed(&self) -> f64 {
        self.dx[0].hypot(self.dx[1])
    }
    /// Weighted outward normal `(x2', -x1')`.
    pub fn normal(&self) -> Vec2 {
        [self.dx[1], -self.dx[0]]
    }
}

/// Closed counterclockwise boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    name: String,
    arcs: Vec<Arc>,
    breakpoints: Vec<f64>,
    angles: Vec<f64>,
    graded: bool,
}

impl Curve {
    fn from_arcs(name: &str, arcs: Vec<Arc>, angles: Vec<f64>, graded: bool) -> Result<Self> {
        let lengths: Vec<f64> = arcs.iter().map(Arc::length).collect();
        if lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidGeometry(format!("{name}: degenerate arc")));
        }
        let total: f64 = lengths.iter().sum();
        let mut breakpoints = Vec::with_capacity(arcs.len() + 1);
        let mut acc = 0.0;
        breakpoints.push(0.0);
        for l in &lengths {
            acc += l;
            breakpoints.push(TWO_PI * acc / total);
        }
        *breakpoints.last_mut().unwrap() = TWO_PI;
        Ok(Self { name: name.to_string(), arcs, breakpoints, angles, graded })
    }

    /// Closed polygon through `vertices`; reoriented counterclockwise if needed.
    pub fn polygon(vertices: &[Vec2]) -> Result<Self> {
        Self::polygon_named("polygon", vertices)
    }

    fn polygon_named(name: &str, vertices: &[Vec2]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(format!("{name} needs at least 3 vertices")));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry(format!("{name} has non-finite vertices")));
        }
        let m = vertices.len();
        let area2: f64 = (0..m)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        if area2.abs() < 1e-14 {
            return Err(Error::InvalidGeometry(format!("{name} has zero area")));
        }
        let mut v = vertices.to_vec();
        if area2 < 0.0 {
            v.reverse();
        }
        let arcs: Vec<Arc> = (0..m).map(|i| Arc::Line { a: v[i], b: v[(i + 1) % m] }).collect();
        let angles = (0..m)
            .map(|i| {
                let prev = v[(i + m - 1) % m];
                let e_in = [v[i][0] - prev[0], v[i][1] - prev[1]];
                let next = v[(i + 1) % m];
                let e_out = [next[0] - v[i][0], next[1] - v[i][1]];
                let turn = (e_in[0] * e_out[1] - e_in[1] * e_out[0])
                    .atan2(e_in[0] * e_out[0] + e_in[1] * e_out[1]);
                PI - turn
            })
            .collect();
        Self::from_arcs(name, arcs, angles, true)
    }

    /// Axis-aligned square of the given side, centered at the origin.
    pub fn square(side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidGeometry(format!("square side {side} must be positive")));
        }
        let a = 0.5 * side;
        Self::polygon_named("square", &[[-a, -a], [a, -a], [a, a], [-a, a]])
    }

    /// Square of side `side` with a centered rectangular notch of the given
    /// width and depth cut into its top edge.
    pub fn ushape(side: f64, notch_width: f64, notch_depth: f64) -> Result<Self> {
        if !(side > 0.0) || !(notch_width > 0.0) || !(notch_depth > 0.0) {
            return Err(Error::InvalidGeometry("U-shape dimensions must be positive".into()));
        }
        if notch_width >= side || notch_depth >= side {
            return Err(Error::InvalidGeometry("U-shape notch must fit inside the square".into()));
        }
        let a = 0.5 * side;
        let w = 0.5 * notch_width;
        let floor = a - notch_depth;
        Self::polygon_named(
            "ushape",
            &[[-a, -a], [a, -a], [a, a], [w, a], [w, floor], [-w, floor], [-w, a], [-a, a]],
        )
    }

    /// Rounded square `|x1|^q + |x2|^q = r^q`, with grading breakpoints at
    /// the four diagonal points (which are smooth, so no corners).
    pub fn lq_ball(q: u32, radius: f64) -> Result<Self> {
        if q < 2 || q % 2 != 0 || q > 4096 {
            return Err(Error::InvalidGeometry(format!("lq_ball exponent q = {q} must be even, 2..=4096")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGeometry(format!("lq_ball radius {radius} must be positive")));
        }
        let arcs = (0..4).map(|quarter| Arc::LqSide { q: q as i32, radius, quarter }).collect();
        Self::from_arcs("lq_ball", arcs, vec![PI; 4], true)
    }

    /// Circle without grading; `x(t) = center + radius (cos t, sin t)`.
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGeometry(format!("circle radius {radius} must be positive")));
        }
        Self::from_arcs("circle", vec![Arc::Circle { center: [0.0, 0.0], radius }], vec![PI], false)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_graded(&self) -> bool {
        self.graded
    }

    /// Breakpoint parameters `T_0 = 0 < T_1 < ... < T_P = 2 pi`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `(T_j, theta_j)` for breakpoints whose interior angle differs from `pi`.
    pub fn corners(&self) -> Vec<(f64, f64)> {
        self.breakpoints
            .iter()
            .zip(&self.angles)
            .filter(|(_, a)| (*a - PI).abs() > 1e-12)
            .map(|(t, a)| (*t, *a))
            .collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.arcs.iter().map(Arc::length).sum()
    }

    fn segment_of(&self, t: f64) -> usize {
        let idx = self.breakpoints.partition_point(|b| *b <= t);
        idx.clamp(1, self.arcs.len()) - 1
    }

    /// Un-graded parametrization at `s in [0, 2 pi)`.
    pub fn eval_ungraded(&self, s: f64) -> CurvePoint {
        let s = s.rem_euclid(TWO_PI);
        let j = self.segment_of(s);
        let lo = self.breakpoints[j];
        let len = self.breakpoints[j + 1] - lo;
        let (x, du, ddu) = self.arcs[j].eval((s - lo) / len);
        let sc = 1.0 / len;
        CurvePoint {
            t: s,
            x,
            dx: [du[0] * sc, du[1] * sc],
            ddx: [ddu[0] * sc * sc, ddu[1] * sc * sc],
        }
    }

    /// Graded parametrization `x(w(t))` with chain-rule derivatives.
    pub fn eval(&self, t: f64, p: u32) -> CurvePoint {
        if !self.graded {
            let mut pt = self.eval_ungraded(t);
            pt.t = t;
            return pt;
        }
        let s = t.rem_euclid(TWO_PI);
        let j = self.segment_of(s);
        let lo = self.breakpoints[j];
        let hi = self.breakpoints[j + 1];
        let g = sigmoid_unchecked(s, lo, hi, p.max(2));
        let len = hi - lo;
        let u = ((g.w - lo) / len).clamp(0.0, 1.0);
        let (x, du, ddu) = self.arcs[j].eval(u);
        let a = g.dw / len;
        let b = g.ddw / len;
        CurvePoint {
            t,
            x,
            dx: [du[0] * a, du[1] * a],
            ddx: [ddu[0] * a * a + du[0] * b, ddu[1] * a * a + du[1] * b],
        }
    }

    /// Graded parameter `w(s)` on segment `j`.
    pub fn sigmoid_w(&self, s: f64, j: usize, p: u32) -> Result<f64> {
        if j + 1 >= self.breakpoints.len() {
            return Err(Error::InvalidGeometry(format!("segment index {j} out of range")));
        }
        Ok(sigmoid(s, self.breakpoints[j], self.breakpoints[j + 1], p)?.w)
    }
}

/// Shapes available by name from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    Square { side: f64 },
    UShape { side: f64, notch_width: f64, notch_depth: f64 },
    LqBall { q: u32, radius: f64 },
    Polygon { vertices: Vec<Vec2> },
    Circle { radius: f64 },
}

impl GeometryKind {
    pub fn square() -> Self {
        GeometryKind::Square { side: 4.0 }
    }
    pub fn ushape() -> Self {
        GeometryKind::UShape { side: 4.0, notch_width: 2.0, notch_depth: 2.0 }
    }
    pub fn lq_ball() -> Self {
        GeometryKind::LqBall { q: 512, radius: 2.0 }
    }
}

pub fn builtin_geometry(kind: &GeometryKind) -> Result<Curve> {
    match kind {
        GeometryKind::Square { side } => Curve::square(*side),
        GeometryKind::UShape { side, notch_width, notch_depth } => {
            Curve::ushape(*side, *notch_width, *notch_depth)
        }
        GeometryKind::LqBall { q, radius } => Curve::lq_ball(*q, *radius),
        GeometryKind::Polygon { vertices } => Curve::polygon(vertices),
        GeometryKind::Circle { radius } => Curve::circle(*radius),
    }
}

/// Shifted equispaced mesh `t_i = i h + h/2`, `h = pi/n`, with cached
/// graded geometry at every node.
#[derive(Debug, Clone)]
pub struct GradedMesh {
    pub n: usize,
    pub p: u32,
    pub h: f64,
    pub t: Vec<f64>,
    pub x: Vec<Vec2>,
    pub dx: Vec<Vec2>,
    pub ddx: Vec<Vec2>,
    pub speed: Vec<f64>,
    pub normal: Vec<Vec2>,
    curve: Shared<Curve>,
}

impl GradedMesh {
    pub fn len(&self) -> usize {
        2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// Cached geometry at node `i`.
    pub fn point(&self, i: usize) -> CurvePoint {
        CurvePoint { t: self.t[i], x: self.x[i], dx: self.dx[i], ddx: self.ddx[i] }
    }

    /// Graded geometry at an arbitrary parameter.
    pub fn eval(&self, t: f64) -> CurvePoint {
        self.curve.eval(t, self.p)
    }

    /// Smallest distance between consecutive nodes in the plane.
    pub fn min_spacing(&self) -> f64 {
        let m = self.len();
        (0..m)
            .map(|i| {
                let a = self.x[i];
                let b = self.x[(i + 1) % m];
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance between consecutive nodes in the plane.
    pub fn max_spacing(&self) -> f64 {
        let m = self.len();
        (0..m)
            .map(|i| {
                let a = self.x[i];
                let b = self.x[(i + 1) % m];
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_mesh(curve: &Curve, n: usize, p: u32) -> Result<GradedMesh> {
    if n < 8 {
        return Err(Error::InvalidGeometry(format!("mesh needs n >= 8, got {n}")));
    }
    SigmoidParams::new(p)?;
    let h = PI / n as f64;
    let m = 2 * n;
    let t: Vec<f64> = (0..m).map(|i| i as f64 * h + 0.5 * h).collect();
    if curve.is_graded() {
        for (i, ti) in t.iter().enumerate() {
            for bp in curve.breakpoints() {
                if (ti - bp).abs() < 1e-12 {
                    return Err(Error::NodeOnCorner { index: i, t: *bp });
                }
            }
        }
    }
    let pts: Vec<CurvePoint> = t.iter().map(|ti| curve.eval(*ti, p)).collect();
    let speed: Vec<f64> = pts.iter().map(CurvePoint::speed).collect();
    if let Some(i) = speed.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::InvalidGeometry(format!("vanishing Jacobian at node {i} (t = {})", t[i])));
    }
    Ok(GradedMesh {
        n,
        p,
        h,
        x: pts.iter().map(|q| q.x).collect(),
        dx: pts.iter().map(|q| q.dx).collect(),
        ddx: pts.iter().map(|q| q.ddx).collect(),
        normal: pts.iter().map(CurvePoint::normal).collect(),
        speed,
        t,
        curve: Shared::new(curve.clone()),
    })
}
