//! Boundary curves, sampling and quadrature.
//!
//! Two parametrizations are supported. A [`FourierBoundary`] is a general
//! closed curve `t ↦ (h₁(t), h₂(t))` given by two truncated Fourier series. A
//! [`SupportBoundary`] is a convex curve described by its support function
//! `p(t)`, with `γ(t) = p(t)·e(t) + p′(t)·e(t)^⊥` and `e(t) = (cos t, sin t)`.
//!
//! All quadrature is the periodic trapezoidal rule.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, Vector2};

/// Default node count for area and perimeter quadrature.
pub const QUADRATURE_NODES: usize = 512;

/// Default grid size for the discretized convexity constraint.
pub const CONVEXITY_GRID: usize = 256;

/// Below this speed the parametrization is considered degenerate.
pub const MIN_SPEED: f64 = 1e-12;

/// Truncated real Fourier series `f(t) = a₀ + Σ_{j=1}^{P} (a_j cos jt + b_j sin jt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    pub a0: f64,
    /// `a_1..a_P`
    pub a: Vec<f64>,
    /// `b_1..b_P`
    pub b: Vec<f64>,
}

impl FourierSeries {
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidConfig(alloc::format!(
                "cosine and sine coefficient arrays differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if !a0.is_finite() || a.iter().chain(&b).any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("non-finite Fourier coefficient".into()));
        }
        Ok(Self { a0, a, b })
    }

    pub fn constant(a0: f64, order: usize) -> Self {
        Self {
            a0,
            a: vec![0.0; order],
            b: vec![0.0; order],
        }
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// Returns `[f, f′, f″]` at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let mut out = [self.a0, 0.0, 0.0];
        // cos jt and sin jt by the angle-addition recurrence
        let (s1, c1) = t.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        for (j, (&aj, &bj)) in self.a.iter().zip(&self.b).enumerate() {
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
            let k = (j + 1) as f64;
            out[0] += aj * c + bj * s;
            out[1] += k * (bj * c - aj * s);
            out[2] -= k * k * (aj * c + bj * s);
        }
        out
    }

    /// Flattened `[a₀, a_1..a_P, b_1..b_P]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.order() + 1);
        v.push(self.a0);
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v
    }

    /// Inverse of [`to_vec`](Self::to_vec) for a series of the given order.
    pub fn from_slice(order: usize, c: &[f64]) -> Self {
        debug_assert_eq!(c.len(), 2 * order + 1);
        Self {
            a0: c[0],
            a: c[1..=order].to_vec(),
            b: c[order + 1..].to_vec(),
        }
    }

    /// Value and first derivative of the basis function with flattened index `idx`.
    pub fn basis(order: usize, idx: usize, t: f64) -> [f64; 2] {
        if idx == 0 {
            [1.0, 0.0]
        } else if idx <= order {
            let k = idx as f64;
            let (s, c) = (k * t).sin_cos();
            [c, -k * s]
        } else {
            let k = (idx - order) as f64;
            let (s, c) = (k * t).sin_cos();
            [s, k * c]
        }
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            a0: self.a0 * s,
            a: self.a.iter().map(|v| v * s).collect(),
            b: self.b.iter().map(|v| v * s).collect(),
        }
    }

    /// `f(-t)`: sine coefficients change sign.
    fn reversed(&self) -> Self {
        Self {
            a0: self.a0,
            a: self.a.clone(),
            b: self.b.iter().map(|v| -v).collect(),
        }
    }
}

/// Local geometry of a boundary curve at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub point: Vector2,
    /// Unit tangent in the direction of increasing `t`.
    pub tangent: Vector2,
    /// Outward unit normal.
    pub normal: Vector2,
    /// Signed curvature, positive on convex arcs of a counterclockwise curve.
    pub curvature: f64,
    /// `|γ′(t)|`
    pub speed: f64,
    /// `γ′(t)`
    pub velocity: Vector2,
}

/// General closed curve given by truncated Fourier series for each coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierBoundary {
    x: FourierSeries,
    y: FourierSeries,
}

impl FourierBoundary {
    /// Validates the curve (nondegenerate speed, simple sampled polygon) and
    /// reverses the parametrization if it is clockwise.
    pub fn new(x: FourierSeries, y: FourierSeries) -> Result<Self> {
        if x.order() != y.order() {
            return Err(Error::InvalidConfig(alloc::format!(
                "coordinate series differ in order ({} vs {})",
                x.order(),
                y.order()
            )));
        }
        if x.order() == 0 {
            return Err(Error::InvalidConfig("Fourier boundary needs order ≥ 1".into()));
        }
        let mut curve = Self { x, y };
        let g = sample_count(curve.order());
        let mut pts = Vec::with_capacity(g);
        for i in 0..g {
            let t = TAU * i as f64 / g as f64;
            let cp = curve.eval(t)?;
            pts.push(cp.point);
        }
        check_simple(&pts)?;
        if polygon_signed_area(&pts) < 0.0 {
            curve = Self {
                x: curve.x.reversed(),
                y: curve.y.reversed(),
            };
        }
        Ok(curve)
    }

    /// Circle of radius `r` centred at `c`, as an order-`order` series.
    pub fn circle(c: Vector2, r: f64, order: usize) -> Result<Self> {
        let mut x = FourierSeries::constant(c.x, order.max(1));
        let mut y = FourierSeries::constant(c.y, order.max(1));
        x.a[0] = r;
        y.b[0] = r;
        Self::new(x, y)
    }

    pub fn order(&self) -> usize {
        self.x.order()
    }

    pub fn x(&self) -> &FourierSeries {
        &self.x
    }

    pub fn y(&self) -> &FourierSeries {
        &self.y
    }

    pub fn eval(&self, t: f64) -> Result<CurvePoint> {
        let [x, dx, ddx] = self.x.eval(t);
        let [y, dy, ddy] = self.y.eval(t);
        let velocity = Vector2::new(dx, dy);
        let speed = velocity.norm();
        if !(speed >= MIN_SPEED) {
            return Err(Error::SingularParametrization { t, speed });
        }
        let tangent = velocity * (1.0 / speed);
        let accel = Vector2::new(ddx, ddy);
        Ok(CurvePoint {
            point: Vector2::new(x, y),
            tangent,
            normal: Vector2::new(tangent.y, -tangent.x),
            curvature: velocity.cross(accel) / (speed * speed * speed),
            speed,
            velocity,
        })
    }
}

/// Convex curve described by its support function `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportBoundary {
    p: FourierSeries,
}

impl SupportBoundary {
    /// Requires `p > 0` (origin interior) and `p + p″ > 0` on the constraint grid.
    pub fn new(p: FourierSeries) -> Result<Self> {
        let s = Self::new_unchecked(p);
        s.validate()?;
        Ok(s)
    }

    /// Wraps coefficients without checking positivity or convexity, for
    /// feasibility queries such as [`convexity_margin`] and projection.
    pub fn new_unchecked(p: FourierSeries) -> Self {
        Self { p }
    }

    pub fn circle(r: f64, order: usize) -> Result<Self> {
        Self::new(FourierSeries::constant(r, order.max(1)))
    }

    fn validate(&self) -> Result<()> {
        if self.p.order() == 0 {
            return Err(Error::InvalidConfig("support function needs order ≥ 1".into()));
        }
        let g = CONVEXITY_GRID.max(4 * self.order());
        let mut worst = (f64::INFINITY, 0.0);
        for i in 0..g {
            let t = TAU * i as f64 / g as f64;
            let [p, _, ddp] = self.p.eval(t);
            if !(p > 0.0) {
                return Err(Error::OriginNotInterior { t, value: p });
            }
            if p + ddp < worst.0 {
                worst = (p + ddp, t);
            }
        }
        if worst.0 < 0.0 {
            return Err(Error::NotConvex { margin: worst.0 });
        }
        if worst.0 < MIN_SPEED {
            return Err(Error::SingularParametrization {
                t: worst.1,
                speed: worst.0,
            });
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.p.order()
    }

    pub fn support(&self) -> &FourierSeries {
        &self.p
    }

    pub fn eval(&self, t: f64) -> Result<CurvePoint> {
        let [p, dp, ddp] = self.p.eval(t);
        let e = Vector2::polar(t);
        let ep = e.perp();
        let rho = p + ddp;
        if !(rho.abs() >= MIN_SPEED) {
            return Err(Error::SingularParametrization { t, speed: rho.abs() });
        }
        let velocity = ep * rho;
        Ok(CurvePoint {
            point: e * p + ep * dp,
            tangent: ep * rho.signum(),
            normal: e * rho.signum(),
            curvature: 1.0 / rho,
            speed: rho.abs(),
            velocity,
        })
    }
}

/// A domain boundary in either parametrization.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Fourier(FourierBoundary),
    Support(SupportBoundary),
}

impl From<FourierBoundary> for Boundary {
    fn from(b: FourierBoundary) -> Self {
        Boundary::Fourier(b)
    }
}

impl From<SupportBoundary> for Boundary {
    fn from(b: SupportBoundary) -> Self {
        Boundary::Support(b)
    }
}

impl Boundary {
    pub fn eval(&self, t: f64) -> Result<CurvePoint> {
        match self {
            Boundary::Fourier(b) => b.eval(t),
            Boundary::Support(b) => b.eval(t),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Boundary::Fourier(b) => b.order(),
            Boundary::Support(b) => b.order(),
        }
    }

    /// Area by Green's theorem with the default node count.
    pub fn area(&self) -> Result<f64> {
        self.area_with(QUADRATURE_NODES)
    }

    pub fn area_with(&self, nodes: usize) -> Result<f64> {
        let n = nodes.max(sample_count(self.order()));
        let mut sum = 0.0;
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let cp = self.eval(t)?;
            sum += cp.point.cross(cp.velocity);
        }
        let a = 0.5 * sum * TAU / n as f64;
        if a <= 0.0 {
            return Err(Error::Orientation(a));
        }
        Ok(a)
    }

    pub fn perimeter(&self) -> Result<f64> {
        self.perimeter_with(QUADRATURE_NODES)
    }

    pub fn perimeter_with(&self, nodes: usize) -> Result<f64> {
        let n = nodes.max(1);
        let mut sum = 0.0;
        for i in 0..n {
            sum += self.eval(TAU * i as f64 / n as f64)?.speed;
        }
        Ok(sum * TAU / n as f64)
    }

    /// Number of real parametrization coefficients.
    pub fn n_coefficients(&self) -> usize {
        match self {
            Boundary::Fourier(b) => 2 * (2 * b.order() + 1),
            Boundary::Support(b) => 2 * b.order() + 1,
        }
    }

    /// Flattened coefficients. Fourier: `[x: a₀, a.., b..; y: a₀, a.., b..]`.
    /// Support: `[a₀, a.., b..]`.
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            Boundary::Fourier(b) => {
                let mut v = b.x.to_vec();
                v.extend(b.y.to_vec());
                v
            }
            Boundary::Support(b) => b.p.to_vec(),
        }
    }

    /// Builds a validated boundary of the same kind and order from flattened coefficients.
    pub fn with_coefficients(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.n_coefficients() {
            return Err(Error::InvalidConfig(alloc::format!(
                "expected {} coefficients, got {}",
                self.n_coefficients(),
                c.len()
            )));
        }
        let order = self.order();
        match self {
            Boundary::Fourier(_) => {
                let h = 2 * order + 1;
                let x = FourierSeries::from_slice(order, &c[..h]);
                let y = FourierSeries::from_slice(order, &c[h..]);
                Ok(FourierBoundary::new(x, y)?.into())
            }
            Boundary::Support(_) => {
                Ok(SupportBoundary::new(FourierSeries::from_slice(order, c))?.into())
            }
        }
    }

    /// `∂γ/∂c_idx (t)`: boundary velocity induced by a unit change of one coefficient.
    pub fn coefficient_velocity(&self, idx: usize, t: f64) -> Vector2 {
        let order = self.order();
        match self {
            Boundary::Fourier(_) => {
                let h = 2 * order + 1;
                if idx < h {
                    Vector2::new(FourierSeries::basis(order, idx, t)[0], 0.0)
                } else {
                    Vector2::new(0.0, FourierSeries::basis(order, idx - h, t)[0])
                }
            }
            Boundary::Support(_) => {
                let [phi, dphi] = FourierSeries::basis(order, idx, t);
                let e = Vector2::polar(t);
                e * phi + e.perp() * dphi
            }
        }
    }

    /// Homothety about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!("invalid scale factor {s}")));
        }
        Ok(match self {
            Boundary::Fourier(b) => Boundary::Fourier(FourierBoundary {
                x: b.x.scaled(s),
                y: b.y.scaled(s),
            }),
            Boundary::Support(b) => Boundary::Support(SupportBoundary { p: b.p.scaled(s) }),
        })
    }

    /// Rigid translation by `v`. For support functions the origin must stay interior.
    pub fn translated(&self, v: Vector2) -> Result<Self> {
        match self {
            Boundary::Fourier(b) => {
                let mut x = b.x.clone();
                let mut y = b.y.clone();
                x.a0 += v.x;
                y.a0 += v.y;
                Ok(Boundary::Fourier(FourierBoundary { x, y }))
            }
            Boundary::Support(b) => {
                let mut p = b.p.clone();
                p.a[0] += v.x;
                p.b[0] += v.y;
                Ok(SupportBoundary::new(p)?.into())
            }
        }
    }

    /// Dense polygon through `n` equally spaced parameter values.
    pub fn polygon(&self, n: usize) -> Result<Vec<Vector2>> {
        (0..n)
            .map(|i| self.eval(TAU * i as f64 / n as f64).map(|cp| cp.point))
            .collect()
    }
}

fn sample_count(order: usize) -> usize {
    QUADRATURE_NODES.max(8 * order)
}

/// `min_i p(t_i) + p″(t_i)` over `g` equally spaced angles.
pub fn convexity_margin(boundary: &SupportBoundary, g: usize) -> f64 {
    (0..g.max(1))
        .map(|i| {
            let [p, _, ddp] = boundary.p.eval(TAU * i as f64 / g as f64);
            p + ddp
        })
        .fold(f64::INFINITY, f64::min)
}

/// Collocation data and MFS source points for one boundary.
#[derive(Clone, Debug)]
pub struct DiscreteBoundary {
    pub params: Vec<f64>,
    pub points: Vec<Vector2>,
    pub normals: Vec<Vector2>,
    pub speeds: Vec<f64>,
    pub curvatures: Vec<f64>,
    /// `(2π/M)|γ′(t_i)|`
    pub weights: Vec<f64>,
    pub sources: Vec<Vector2>,
    /// Offset length used for the sources.
    pub alpha: f64,
}

impl DiscreteBoundary {
    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn n(&self) -> usize {
        self.sources.len()
    }

    /// Trapezoidal approximation of the perimeter.
    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Trapezoidal approximation of the enclosed area, `½ Σ w_i x_i·n_i`.
    pub fn area(&self) -> f64 {
        0.5 * self
            .points
            .iter()
            .zip(&self.normals)
            .zip(&self.weights)
            .map(|((x, n), w)| w * x.dot(*n))
            .sum::<f64>()
    }
}

/// Samples `m` collocation nodes and places `n` sources at `γ(t_j) + α n(t_j)`.
pub fn discretize(boundary: &Boundary, m: usize, n: usize, alpha: f64) -> Result<DiscreteBoundary> {
    discretize_with_phase(boundary, m, n, alpha, 0.0)
}

/// As [`discretize`], with all parameter nodes shifted by `phase`.
pub fn discretize_with_phase(
    boundary: &Boundary,
    m: usize,
    n: usize,
    alpha: f64,
    phase: f64,
) -> Result<DiscreteBoundary> {
    if n == 0 || m < n {
        return Err(Error::InvalidConfig(alloc::format!(
            "need 1 ≤ N ≤ M (got M = {m}, N = {n})"
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!("offset must be positive, got {alpha}")));
    }
    let h = TAU / m as f64;
    let mut db = DiscreteBoundary {
        params: Vec::with_capacity(m),
        points: Vec::with_capacity(m),
        normals: Vec::with_capacity(m),
        speeds: Vec::with_capacity(m),
        curvatures: Vec::with_capacity(m),
        weights: Vec::with_capacity(m),
        sources: Vec::with_capacity(n),
        alpha,
    };
    for i in 0..m {
        let t = phase + h * i as f64;
        let cp = boundary.eval(t)?;
        db.params.push(t);
        db.points.push(cp.point);
        db.normals.push(cp.normal);
        db.speeds.push(cp.speed);
        db.curvatures.push(cp.curvature);
        db.weights.push(h * cp.speed);
    }
    let poly = boundary.polygon(m.max(QUADRATURE_NODES))?;
    for j in 0..n {
        let t = phase + TAU * j as f64 / n as f64;
        let cp = boundary.eval(t)?;
        let y = cp.point + cp.normal * alpha;
        if point_in_polygon(y, &poly) {
            return Err(Error::InvalidOffset { index: j });
        }
        db.sources.push(y);
    }
    Ok(db)
}

/// Shoelace signed area of a closed polygon.
pub fn polygon_signed_area(pts: &[Vector2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

/// Even-odd crossing test. Points exactly on an edge may land on either side.
pub fn point_in_polygon(p: Vector2, pts: &[Vector2]) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_intersect(p1: Vector2, p2: Vector2, q1: Vector2, q2: Vector2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vector2, b: Vector2, c: Vector2, d: f64| {
        d == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(p1, p2, q1, d1) || on(p1, p2, q2, d2) || on(q1, q2, p1, d3) || on(q1, q2, p2, d4)
}

/// Rejects closed polygons with intersecting non-adjacent edges.
///
/// Edges are swept in order of their left endpoint; only edges whose
/// x-extents overlap are tested.
pub fn check_simple(pts: &[Vector2]) -> Result<()> {
    let n = pts.len();
    if n < 3 {
        return Ok(());
    }
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
    let lo = |i: usize| {
        let (a, b) = seg(i);
        a.x.min(b.x)
    };
    let hi = |i: usize| {
        let (a, b) = seg(i);
        a.x.max(b.x)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lo(i).total_cmp(&lo(j)));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let x = lo(i);
        active.retain(|&j| hi(j) >= x);
        let (p1, p2) = seg(i);
        for &j in &active {
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                continue;
            }
            let (q1, q2) = seg(j);
            if segments_intersect(p1, p2, q1, q2) {
                return Err(Error::SelfIntersection {
                    first: i.min(j),
                    second: i.max(j),
                });
            }
        }
        active.push(i);
    }
    Ok(())
}

/// The curve `(cos t, sin t + 0.3 sin 3t)`.
pub fn omega1() -> FourierBoundary {
    let x = FourierSeries::new(0.0, vec![1.0, 0.0, 0.0], vec![0.0; 3]).expect("finite");
    let y = FourierSeries::new(0.0, vec![0.0; 3], vec![1.0, 0.0, 0.3]).expect("finite");
    FourierBoundary::new(x, y).expect("valid curve")
}

/// Radius of the disk with unit area.
pub fn unit_area_radius() -> f64 {
    1.0 / PI.sqrt()
}
