//! Shape derivatives of Steklov-Lamé eigenvalues and area-normalized ascent.
//!
//! For a simple eigenvalue with boundary-normalized eigenfunction `u` and a
//! deformation `V`,
//!
//! ```text
//! Λ′(V) = ∮ (Ae(u):e(u) − 4 Ae(u)n·Πe(u)n − Λ u·(Hu + 2∂ₙu − 4Πe(u)n)) V·n ds
//! ```
//!
//! with `Π = n⊗n` and `H` the curvature (positive on convex arcs).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{convexity_margin, Boundary, FourierSeries, SupportBoundary, CONVEXITY_GRID};
use crate::kernel::{hooke, strain};
use crate::mfs::{solve, EigenPair, MfsConfig, Spectrum};
use crate::{DisplacementField, Error, LameParameters, Result, Vector2};

/// Relative gap below which an eigenvalue is treated as part of a cluster.
pub const SIMPLE_GAP: f64 = 1e-3;

/// Boundary deformation used as a shape-derivative direction.
#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationField {
    /// Unit change of one flattened parametrization coefficient.
    Coefficient(usize),
    /// `Σ c_i ∂γ/∂c_i` over all coefficients.
    Direction(Vec<f64>),
    /// `V(x) = x`
    Dilation,
    Translation(Vector2),
}

impl PerturbationField {
    /// `V(γ(t))`
    pub fn velocity(&self, boundary: &Boundary, t: f64, point: Vector2) -> Vector2 {
        match self {
            PerturbationField::Coefficient(i) => boundary.coefficient_velocity(*i, t),
            PerturbationField::Direction(c) => c
                .iter()
                .enumerate()
                .filter(|(_, ci)| **ci != 0.0)
                .fold(Vector2::ZERO, |acc, (i, ci)| acc + boundary.coefficient_velocity(i, t) * *ci),
            PerturbationField::Dilation => point,
            PerturbationField::Translation(v) => *v,
        }
    }
}

/// The shape-derivative integrand of one eigenpair sampled on a trapezoidal grid.
#[derive(Clone, Debug)]
pub struct ShapeDensity {
    params: Vec<f64>,
    points: Vec<Vector2>,
    normals: Vec<Vector2>,
    /// Quadrature weight `h|γ′|` times the normalized integrand.
    weighted: Vec<f64>,
}

impl ShapeDensity {
    pub fn new(boundary: &Boundary, pair: &EigenPair, nodes: usize) -> Result<Self> {
        density_with(boundary, pair, nodes, |n| crate::Matrix2::outer(n, n))
    }

    /// `∮ g V·n ds`
    pub fn integrate(&self, boundary: &Boundary, field: &PerturbationField) -> f64 {
        (0..self.params.len())
            .map(|q| {
                let v = field.velocity(boundary, self.params[q], self.points[q]);
                self.weighted[q] * v.dot(self.normals[q])
            })
            .sum()
    }

    /// Derivative for every coefficient of `boundary`.
    pub fn gradient(&self, boundary: &Boundary) -> Vec<f64> {
        (0..boundary.n_coefficients())
            .map(|i| self.integrate(boundary, &PerturbationField::Coefficient(i)))
            .collect()
    }
}

fn density_with(
    boundary: &Boundary,
    pair: &EigenPair,
    nodes: usize,
    projector: impl Fn(Vector2) -> crate::Matrix2,
) -> Result<ShapeDensity> {
    let nodes = nodes.max(8);
    let h = TAU / nodes as f64;
    let lam = pair.value;
    let params = &pair.params;
    let mut out = ShapeDensity {
        params: Vec::with_capacity(nodes),
        points: Vec::with_capacity(nodes),
        normals: Vec::with_capacity(nodes),
        weighted: Vec::with_capacity(nodes),
    };
    let mut norm2 = 0.0;
    for q in 0..nodes {
        let t = h * q as f64;
        let cp = boundary.eval(t)?;
        let n = cp.normal;
        let u = pair.value(cp.point)?;
        let j = pair.jacobian(cp.point)?;
        let e = strain(&j);
        let s = hooke(&e, params);
        let pi = projector(n);
        let pen = pi * (e * n);
        let g = s.ddot(&e) - 4.0 * (s * n).dot(pen)
            - lam * (cp.curvature * u.norm_squared() + 2.0 * u.dot(j * n) - 4.0 * u.dot(pen));
        let w = h * cp.speed;
        norm2 += w * u.norm_squared();
        out.params.push(t);
        out.points.push(cp.point);
        out.normals.push(n);
        out.weighted.push(w * g);
    }
    if !(norm2 > 0.0) {
        return Err(Error::UntrustworthyPair(norm2));
    }
    for w in &mut out.weighted {
        *w /= norm2;
    }
    Ok(out)
}

/// Derivative of one pair's value, with no simplicity check. Inside a
/// cluster the result depends on the chosen eigenbasis.
pub fn pair_derivative(
    boundary: &Boundary,
    pair: &EigenPair,
    field: &PerturbationField,
    nodes: usize,
) -> Result<f64> {
    Ok(ShapeDensity::new(boundary, pair, nodes)?.integrate(boundary, field))
}

/// `[start, end)` of the values within [`SIMPLE_GAP`] of `index`, chained.
///
/// Fails if the cluster may continue past the computed values.
pub fn cluster_range(spectrum: &Spectrum, index: usize) -> Result<(usize, usize)> {
    let v = &spectrum.pairs;
    if index >= v.len() {
        return Err(Error::IndexOutOfRange { index, len: v.len() });
    }
    let close = |a: f64, b: f64| (b - a).abs() <= SIMPLE_GAP * a.abs().max(b.abs());
    let mut start = index;
    while start > 0 && close(v[start - 1].value, v[start].value) {
        start -= 1;
    }
    let mut end = index + 1;
    while end < v.len() && close(v[end - 1].value, v[end].value) {
        end += 1;
    }
    if end == v.len() {
        // the next value was not computed, so the gap above is unknown
        return Err(Error::IndexOutOfRange { index: end, len: v.len() });
    }
    Ok((start, end))
}

fn simple(spectrum: &Spectrum, index: usize) -> Result<&EigenPair> {
    let (start, end) = cluster_range(spectrum, index)?;
    if end - start > 1 {
        return Err(Error::Multiplicity {
            index,
            size: end - start,
        });
    }
    Ok(&spectrum.pairs[index])
}

/// Shape derivative of the simple eigenvalue `spectrum.pairs[index]`.
pub fn shape_derivative(
    boundary: &Boundary,
    spectrum: &Spectrum,
    index: usize,
    field: &PerturbationField,
    nodes: usize,
) -> Result<f64> {
    pair_derivative(boundary, simple(spectrum, index)?, field, nodes)
}

/// Gradient of the simple eigenvalue `spectrum.pairs[index]` with respect to
/// the flattened boundary coefficients.
pub fn coefficient_gradient(
    boundary: &Boundary,
    spectrum: &Spectrum,
    index: usize,
    nodes: usize,
) -> Result<Vec<f64>> {
    Ok(ShapeDensity::new(boundary, simple(spectrum, index)?, nodes)?.gradient(boundary))
}

/// Gradient of the mean of the cluster containing `index`. Equals the
/// ordinary gradient for a simple value.
pub fn cluster_gradient(
    boundary: &Boundary,
    spectrum: &Spectrum,
    index: usize,
    nodes: usize,
) -> Result<Vec<f64>> {
    let (start, end) = cluster_range(spectrum, index)?;
    let mut g = vec![0.0; boundary.n_coefficients()];
    for pair in &spectrum.pairs[start..end] {
        for (gi, d) in g.iter_mut().zip(ShapeDensity::new(boundary, pair, nodes)?.gradient(boundary)) {
            *gi += d / (end - start) as f64;
        }
    }
    Ok(g)
}

/// `∂|Ω|/∂c_i = ∮ V_i·n ds`
pub fn area_gradient(boundary: &Boundary, nodes: usize) -> Result<Vec<f64>> {
    let h = TAU / nodes.max(8) as f64;
    let mut g = vec![0.0; boundary.n_coefficients()];
    for q in 0..nodes.max(8) {
        let t = h * q as f64;
        let cp = boundary.eval(t)?;
        for (i, gi) in g.iter_mut().enumerate() {
            *gi += h * cp.speed * boundary.coefficient_velocity(i, t).dot(cp.normal);
        }
    }
    Ok(g)
}

/// Gradient of the scale-invariant `Λ√|Ω|` from the gradient of `Λ`.
pub fn normalized_gradient(grad: &[f64], value: f64, area: f64, area_grad: &[f64]) -> Vec<f64> {
    let s = area.sqrt();
    grad.iter()
        .zip(area_grad)
        .map(|(g, a)| s * g + value * a / (2.0 * s))
        .collect()
}

/// Euclidean projection of support coefficients onto `p + p″ ≥ 0` on `g` angles.
pub fn project_convex(coeffs: &[f64], order: usize, g: usize) -> Result<Vec<f64>> {
    project_convex_with_margin(coeffs, order, g, 0.0)
}

/// As [`project_convex`] with the constraint `p + p″ ≥ margin`.
pub fn project_convex_with_margin(coeffs: &[f64], order: usize, g: usize, margin: f64) -> Result<Vec<f64>> {
    let dim = 2 * order + 1;
    if coeffs.len() != dim || g == 0 || !(margin >= 0.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "projection needs {dim} coefficients, a nonempty grid and a nonnegative margin"
        )));
    }
    let rows: Vec<Vec<f64>> = (0..g)
        .map(|i| {
            let t = TAU * i as f64 / g as f64;
            let mut r = vec![0.0; dim];
            r[0] = 1.0;
            for k in 1..=order {
                let f = 1.0 - (k * k) as f64;
                r[k] = f * (k as f64 * t).cos();
                r[order + k] = f * (k as f64 * t).sin();
            }
            r
        })
        .collect();
    let slack: Vec<f64> = rows
        .iter()
        .map(|r| margin - r.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    if slack.iter().all(|s| *s <= 0.0) {
        return Ok(coeffs.to_vec());
    }
    // least-distance form: min |z| s.t. rows·z ≥ slack
    let e = Mat::<f64>::from_fn(dim + 1, g, |i, j| if i < dim { rows[j][i] } else { slack[j] });
    let mut f = vec![0.0; dim + 1];
    f[dim] = 1.0;
    let u = nnls(&e, &f)?;
    let r: Vec<f64> = (0..=dim)
        .map(|i| (0..g).map(|j| e[(i, j)] * u[j]).sum::<f64>() - f[i])
        .collect();
    if !(r[dim].abs() > 1e-14) {
        return Err(Error::Decomposition("convexity projection is infeasible"));
    }
    Ok(coeffs.iter().zip(&r).map(|(c, ri)| c - ri / r[dim]).collect())
}

/// Lawson-Hanson nonnegative least squares `min |E u − f|, u ≥ 0`.
fn nnls(e: &Mat<f64>, f: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (e.nrows(), e.ncols());
    let tol = 1e-12 * (1.0 + e.norm_max());
    let mut u = vec![0.0; n];
    let mut active = vec![false; n];
    let dual = |u: &[f64]| -> Vec<f64> {
        let r: Vec<f64> = (0..m).map(|i| f[i] - (0..n).map(|j| e[(i, j)] * u[j]).sum::<f64>()).collect();
        (0..n).map(|j| (0..m).map(|i| e[(i, j)] * r[i]).sum()).collect()
    };
    for _ in 0..3 * n {
        let w = dual(&u);
        let pick = (0..n)
            .filter(|&j| !active[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(j) = pick else {
            return Ok(u);
        };
        active[j] = true;
        loop {
            let set: Vec<usize> = (0..n).filter(|&j| active[j]).collect();
            if set.len() > m {
                return Err(Error::Decomposition("projection active set exceeds its rank"));
            }
            let sub = Mat::<f64>::from_fn(m, set.len(), |i, c| e[(i, set[c])]);
            let rhs = Mat::<f64>::from_fn(m, 1, |i, _| f[i]);
            let sol = sub.qr().solve_lstsq(&rhs);
            let mut z = vec![0.0; n];
            for (c, &j) in set.iter().enumerate() {
                z[j] = sol[(c, 0)];
            }
            if set.iter().all(|&j| z[j] > 0.0) {
                u = z;
                break;
            }
            let alpha = set
                .iter()
                .filter(|&&j| z[j] <= 0.0)
                .map(|&j| u[j] / (u[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            for &j in &set {
                u[j] += alpha * (z[j] - u[j]);
                if u[j] <= tol {
                    u[j] = 0.0;
                    active[j] = false;
                }
            }
        }
    }
    Err(Error::Decomposition("nonnegative least squares did not converge"))
}

/// Circle `(centre, radius)` fitted algebraically to `pts`, and the largest
/// radial deviation of `pts` from it.
pub fn disk_fit_distance(pts: &[Vector2]) -> Result<(Vector2, f64, f64)> {
    // x² + y² + Dx + Ey + F = 0 in the least-squares sense
    let a = Mat::<f64>::from_fn(pts.len(), 3, |i, j| match j {
        0 => pts[i].x,
        1 => pts[i].y,
        _ => 1.0,
    });
    let b = Mat::<f64>::from_fn(pts.len(), 1, |i, _| -pts[i].norm_squared());
    if pts.len() < 3 {
        return Err(Error::InvalidConfig("circle fit needs at least 3 points".into()));
    }
    let s = a.qr().solve_lstsq(&b);
    let c = Vector2::new(-s[(0, 0)] / 2.0, -s[(1, 0)] / 2.0);
    let r2 = c.norm_squared() - s[(2, 0)];
    if !(r2 > 0.0) {
        return Err(Error::Decomposition("degenerate circle fit"));
    }
    let r = r2.sqrt();
    let d = pts.iter().map(|p| ((*p - c).norm() - r).abs()).fold(0.0, f64::max);
    Ok((c, r, d))
}

/// Constraint set of an optimization run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    Area,
    AreaConvex,
}

/// Ascent settings.
#[derive(Clone, Debug, PartialEq)]
pub struct OptConfig {
    /// 1-based index of the maximized eigenvalue.
    pub objective: usize,
    pub mode: ConstraintMode,
    pub max_iter: usize,
    /// Relative objective change that ends a fidelity level.
    pub tol: f64,
    pub initial_step: f64,
    pub max_halvings: usize,
    /// Source counts, used in order as the ascent settles.
    pub schedule: Vec<usize>,
    /// Solver template; `n` is overridden by the schedule.
    pub mfs: MfsConfig,
    /// Minimum radius of curvature kept by convex projection.
    pub convex_margin: f64,
    /// Step factor used while the objective is clustered.
    pub cluster_step: f64,
}

impl OptConfig {
    pub fn new(objective: usize, mode: ConstraintMode) -> Self {
        Self {
            objective,
            mode,
            max_iter: 200,
            tol: 1e-6,
            initial_step: 1e-2,
            max_halvings: 20,
            schedule: vec![64, 128, 256],
            mfs: MfsConfig::new(64).with_residual_tol(1e-3),
            convex_margin: 1e-2,
            cluster_step: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.objective == 0 {
            return bad("objective index is 1-based");
        }
        if self.schedule.is_empty() {
            return bad("resolution schedule is empty");
        }
        if !(self.tol > 0.0 && self.initial_step > 0.0 && self.convex_margin >= 0.0) {
            return bad("tolerance and step must be positive");
        }
        if !(self.cluster_step > 0.0 && self.cluster_step <= 1.0) {
            return bad("cluster step factor must lie in (0, 1]");
        }
        for &n in &self.schedule {
            self.mfs.clone().with_n(n).validate()?;
        }
        Ok(())
    }
}

/// One accepted iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptRecord {
    pub iterate: usize,
    pub objective: f64,
    pub area: f64,
    /// Convexity margin (support form only).
    pub margin: Option<f64>,
    pub step: f64,
    /// Source count at which the objective was certified.
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptStatus {
    Running,
    Converged,
    MaxIterations,
    /// Backtracking failed at the finest resolution.
    Stalled,
}

impl OptStatus {
    pub fn label(&self) -> &'static str {
        match self {
            OptStatus::Running => "running",
            OptStatus::Converged => "converged",
            OptStatus::MaxIterations => "max_iterations",
            OptStatus::Stalled => "stalled",
        }
    }
}

/// State of an ascent run.
#[derive(Clone, Debug)]
pub struct OptState {
    pub boundary: Boundary,
    pub params: LameParameters,
    pub config: OptConfig,
    pub step: f64,
    pub iteration: usize,
    pub level: usize,
    pub value: f64,
    pub spectrum: Spectrum,
    pub history: Vec<OptRecord>,
    pub status: OptStatus,
}

impl OptState {
    /// Renormalizes `boundary` to unit area and certifies the objective.
    pub fn new(boundary: Boundary, params: LameParameters, config: OptConfig) -> Result<Self> {
        config.validate()?;
        let boundary = normalize(&boundary)?;
        let spectrum = evaluate(&boundary, &params, &config, 0)?;
        let value = spectrum.pairs[config.objective - 1].value;
        let mut s = Self {
            boundary,
            params,
            step: config.initial_step,
            config,
            iteration: 0,
            level: 0,
            value,
            spectrum,
            history: Vec::new(),
            status: OptStatus::Running,
        };
        s.record();
        Ok(s)
    }

    fn record(&mut self) {
        let margin = match &self.boundary {
            Boundary::Support(b) => Some(convexity_margin(b, CONVEXITY_GRID)),
            Boundary::Fourier(_) => None,
        };
        self.history.push(OptRecord {
            iterate: self.iteration,
            objective: self.value,
            area: self.boundary.area().unwrap_or(f64::NAN),
            margin,
            step: self.step,
            n: self.config.schedule[self.level],
        });
    }

    fn nodes(&self) -> usize {
        crate::geometry::QUADRATURE_NODES.max(4 * self.config.schedule[self.level])
    }

    /// Ascent direction of `Λₙ√|Ω|` and whether the objective is clustered.
    pub fn direction(&self) -> Result<(Vec<f64>, bool)> {
        let idx = self.config.objective - 1;
        let nodes = self.nodes();
        let (start, end) = cluster_range(&self.spectrum, idx)?;
        let grad = cluster_gradient(&self.boundary, &self.spectrum, idx, nodes)?;
        let mean = self.spectrum.pairs[start..end].iter().map(|p| p.value).sum::<f64>() / (end - start) as f64;
        let ag = area_gradient(&self.boundary, nodes)?;
        let area = self.boundary.area()?;
        let mut d = normalized_gradient(&grad, mean, area, &ag);
        if let Boundary::Support(_) = self.boundary {
            // translations are handled by recentring
            d[1] = 0.0;
            d[1 + self.boundary.order()] = 0.0;
        }
        Ok((d, end - start > 1))
    }

    /// One gradient step with backtracking. Returns whether a step was accepted.
    pub fn step_once(&mut self) -> Result<bool> {
        let (d, clustered) = self.direction()?;
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.iteration += 1;
        if !(norm > 0.0) {
            return Ok(false);
        }
        let x = self.boundary.coefficients();
        let mut step = self.step * if clustered { self.config.cluster_step } else { 1.0 };
        for _ in 0..=self.config.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di / norm).collect();
            if let Ok((b, spec)) = self.trial(&trial) {
                let v = spec.pairs[self.config.objective - 1].value;
                if v > self.value {
                    let change = (v - self.value) / self.value;
                    self.boundary = b;
                    self.spectrum = spec;
                    self.value = v;
                    self.step = (2.0 * step).min(10.0 * self.config.initial_step);
                    self.record();
                    if change < self.config.tol {
                        return Ok(false);
                    }
                    return Ok(true);
                }
            }
            step *= 0.5;
        }
        Ok(false)
    }

    fn trial(&self, coeffs: &[f64]) -> Result<(Boundary, Spectrum)> {
        let mut c = coeffs.to_vec();
        if let (Boundary::Support(_), ConstraintMode::AreaConvex) = (&self.boundary, self.config.mode) {
            c = project_convex_with_margin(&c, self.boundary.order(), CONVEXITY_GRID, self.config.convex_margin)?;
        }
        let b = normalize(&self.boundary.with_coefficients(&c)?)?;
        let spec = evaluate(&b, &self.params, &self.config, self.level)?;
        Ok((b, spec))
    }

    /// Moves to the next source count and re-certifies the current shape.
    fn refine(&mut self) -> Result<bool> {
        if self.level + 1 >= self.config.schedule.len() {
            return Ok(false);
        }
        self.level += 1;
        self.spectrum = evaluate(&self.boundary, &self.params, &self.config, self.level)?;
        self.value = self.spectrum.pairs[self.config.objective - 1].value;
        self.step = self.config.initial_step;
        Ok(true)
    }
}

/// Runs the ascent until convergence at the finest level, a stall, or the
/// iteration cap.
pub fn optimize(mut state: OptState) -> Result<OptState> {
    let mut stalled_here = false;
    while state.iteration < state.config.max_iter {
        let before = state.history.len();
        if state.step_once()? {
            stalled_here = false;
            continue;
        }
        // a level ends on a small accepted change or a failed line search
        if state.history.len() == before {
            stalled_here = true;
        }
        if !state.refine()? {
            state.status = if stalled_here {
                OptStatus::Stalled
            } else {
                OptStatus::Converged
            };
            return Ok(state);
        }
        stalled_here = false;
    }
    state.status = OptStatus::MaxIterations;
    Ok(state)
}

/// Unit-area homothety; support functions are also recentred on their Steiner point.
fn normalize(boundary: &Boundary) -> Result<Boundary> {
    let mut b = boundary.clone();
    if let Boundary::Support(s) = &b {
        let mut c = s.support().to_vec();
        let p = s.order();
        c[1] = 0.0;
        c[1 + p] = 0.0;
        b = SupportBoundary::new(FourierSeries::from_slice(p, &c))?.into();
    }
    let a = b.area()?;
    b.scaled(1.0 / a.sqrt())
}

fn evaluate(boundary: &Boundary, params: &LameParameters, config: &OptConfig, level: usize) -> Result<Spectrum> {
    let cfg = config.mfs.clone().with_n(config.schedule[level]);
    // values past the objective until its cluster is seen to end
    let mut k = config.objective + 1;
    loop {
        let s = solve(boundary, params, &cfg, k)?;
        match cluster_range(&s, config.objective - 1) {
            Err(Error::IndexOutOfRange { .. }) if k < 4 * config.objective + 8 => k *= 2,
            Err(e) => return Err(e),
            Ok(_) => return Ok(s),
        }
    }
}

/// Equal-area disk value `Λ₁ = 2μ/R` or `4μ(λ+μ)/((λ+3μ)R)` for unit area.
pub fn unit_area_disk_first(params: &LameParameters) -> f64 {
    let r = 1.0 / PI.sqrt();
    crate::disk::first_positive(r, params).map(|v| v.0).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{omega1, FourierBoundary};
    use crate::Matrix2;
    use proptest::prelude::*;

    fn params(l: f64, m: f64) -> LameParameters {
        LameParameters::new(l, m).unwrap()
    }

    fn unit_disk_support(order: usize) -> Boundary {
        SupportBoundary::circle(1.0 / PI.sqrt(), order).unwrap().into()
    }

    // deterministic pseudo-random direction
    fn wiggle(n: usize, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * ((i as f64 + 1.0) * 12.9898).sin()).collect()
    }

    #[test]
    fn translation_is_invisible() {
        let b: Boundary = omega1().into();
        let s = solve(&b, &params(1.0, 3.0), &MfsConfig::new(200), 3).unwrap();
        for v in [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)] {
            let d = shape_derivative(&b, &s, 0, &PerturbationField::Translation(v), 800).unwrap();
            assert!(d.abs() < 1e-6, "{d}");
        }
    }

    #[test]
    fn dilation_gives_minus_value_on_disk() {
        let pr = params(1.0, 0.3);
        let b: Boundary = FourierBoundary::circle(Vector2::ZERO, 1.0 / PI.sqrt(), 1).unwrap().into();
        let s = solve(&b, &pr, &MfsConfig::new(120), 22).unwrap();
        for p in &s.pairs {
            let d = pair_derivative(&b, p, &PerturbationField::Dilation, 960).unwrap();
            assert!((d + p.value).abs() < 1e-4 * p.value, "{} {}", d, p.value);
        }
        // the radial value is simple for these parameters
        let radial = 2.0 * 1.3 * PI.sqrt();
        let i = s.pairs.iter().position(|p| (p.value - radial).abs() < 1e-8).unwrap();
        let d = shape_derivative(&b, &s, i, &PerturbationField::Dilation, 960).unwrap();
        assert!((d + radial).abs() < 1e-4 * radial);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let pr = params(1.0, 3.0);
        let b: Boundary = omega1().into();
        let cfg = MfsConfig::new(200);
        let s = solve(&b, &pr, &cfg, 3).unwrap();
        let dir = wiggle(b.n_coefficients(), 0.1);
        let field = PerturbationField::Direction(dir.clone());
        let d = shape_derivative(&b, &s, 0, &field, 800).unwrap();
        let h = 1e-5;
        let value = |sign: f64| {
            let c: Vec<f64> = b.coefficients().iter().zip(&dir).map(|(c, v)| c + sign * h * v).collect();
            solve(&b.with_coefficients(&c).unwrap(), &pr, &cfg, 1).unwrap().pairs[0].value
        };
        let fd = (value(1.0) - value(-1.0)) / (2.0 * h);
        assert!((d - fd).abs() < 1e-4 * fd.abs(), "{d} vs {fd}");

        // the projector terms combine into (Ae(u)n − Λu)·Πe(u)n, which vanishes
        // on an eigenpair, so a constant Cartesian projector gives the same value
        let cart = density_with(&b, &s.pairs[0], 800, |_| Matrix2::new(1.0, 0.0, 0.0, 0.0))
            .unwrap()
            .integrate(&b, &field);
        assert!((cart - d).abs() < 1e-8 * d.abs(), "{cart} vs {d}");
    }

    #[test]
    fn gradient_matches_finite_differences_on_convex_domain() {
        let pr = params(1.0, 0.5);
        let mut p = FourierSeries::constant(0.6, 3);
        p.a[1] = 0.05;
        p.b[2] = -0.02;
        p.a[2] = 0.01;
        let b: Boundary = SupportBoundary::new(p).unwrap().into();
        let cfg = MfsConfig::new(160);
        let s = solve(&b, &pr, &cfg, 2).unwrap();
        let g = coefficient_gradient(&b, &s, 0, 640).unwrap();
        let h = 1e-5;
        let x = b.coefficients();
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..x.len() {
            let value = |sign: f64| {
                let mut c = x.clone();
                c[i] += sign * h;
                solve(&b.with_coefficients(&c).unwrap(), &pr, &cfg, 1).unwrap().pairs[0].value
            };
            let fd = (value(1.0) - value(-1.0)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-3 * fd.abs().max(1e-2 * scale), "{i}: {} vs {fd}", g[i]);
        }
        // translations of the support function
        assert!(g[1].abs() < 1e-6 && g[4].abs() < 1e-6, "{g:?}");
    }

    #[test]
    fn disk_is_critical_for_first_value() {
        let pr = params(1.0, 0.5);
        let b = unit_disk_support(4);
        let s = solve(&b, &pr, &MfsConfig::new(120), 3).unwrap();
        let g = cluster_gradient(&b, &s, 0, 960).unwrap();
        let ag = area_gradient(&b, 960).unwrap();
        let d = normalized_gradient(&g, s.pairs[0].value, b.area().unwrap(), &ag);
        assert!(d.iter().all(|v| v.abs() < 1e-4), "{d:?}");
        assert!(matches!(
            coefficient_gradient(&b, &s, 0, 960),
            Err(Error::Multiplicity { index: 0, size: 2 })
        ));
    }

    #[test]
    fn area_gradient_of_dilation_mode() {
        // ∂|Ω|/∂a₀ of a support function is the perimeter
        let b = unit_disk_support(2);
        let g = area_gradient(&b, 512).unwrap();
        assert!((g[0] - b.perimeter().unwrap()).abs() < 1e-12);
        assert!(g[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn projection_leaves_feasible_input() {
        let c = vec![1.0, 0.0, 0.1, 0.0, 0.05];
        assert_eq!(project_convex(&c, 2, 256).unwrap(), c);
    }

    #[test]
    fn projection_of_mode_two_violation() {
        let c = vec![1.0, 0.0, 0.5, 0.0, 0.0];
        let p = project_convex(&c, 2, 256).unwrap();
        assert!((p[0] - 1.05).abs() < 1e-12 && (p[2] - 0.35).abs() < 1e-12, "{p:?}");
        let m = convexity_margin(&SupportBoundary::new_unchecked(FourierSeries::from_slice(2, &p)), 256);
        assert!((0.0..=1e-8).contains(&m) || m.abs() < 1e-14, "{m}");
    }

    #[test]
    fn projection_keeps_inactive_modes() {
        let mut c = vec![0.0; 7];
        c[0] = 1.0;
        c[2] = 0.5;
        c[1] = 0.3;
        c[4] = -0.2;
        let p = project_convex(&c, 3, 256).unwrap();
        // translations carry no constraint weight
        assert_eq!((p[1], p[4]), (c[1], c[4]));
        // odd and sine modes cancel between the symmetric binding angles
        for i in [3, 5, 6] {
            assert!(p[i].abs() < 1e-15, "{i}: {p:?}");
        }
    }

    #[test]
    fn projection_with_margin() {
        let c = vec![0.5, 0.0, 0.3, 0.0, 0.1];
        let p = project_convex_with_margin(&c, 2, 256, 0.05).unwrap();
        let m = convexity_margin(&SupportBoundary::new_unchecked(FourierSeries::from_slice(2, &p)), 256);
        assert!((m - 0.05).abs() < 1e-10, "{m}");
    }

    #[test]
    fn disk_fit_of_circle_and_ellipse() {
        let circle: Vec<Vector2> = (0..64).map(|i| Vector2::new(1.0, -2.0) + Vector2::polar(i as f64 * 0.1) * 3.0).collect();
        let (c, r, d) = disk_fit_distance(&circle).unwrap();
        assert!((c - Vector2::new(1.0, -2.0)).norm() < 1e-12 && (r - 3.0).abs() < 1e-12 && d < 1e-12);
        let ellipse: Vec<Vector2> = (0..256)
            .map(|i| {
                let t = TAU * i as f64 / 256.0;
                Vector2::new(1.1 * t.cos(), 0.9 * t.sin())
            })
            .collect();
        let (_, r, d) = disk_fit_distance(&ellipse).unwrap();
        assert!((r - 1.0).abs() < 0.02 && d > 0.05 && d < 0.15, "{r} {d}");
    }

    fn perturbed_disk() -> Boundary {
        let mut b = FourierBoundary::circle(Vector2::ZERO, 1.0, 3).unwrap();
        let mut x = b.x().clone();
        let mut y = b.y().clone();
        x.a[1] = 0.08;
        y.b[2] = 0.04;
        x.b[1] = 0.03;
        b = FourierBoundary::new(x, y).unwrap();
        b.into()
    }

    fn short_run(objective: usize) -> OptConfig {
        let mut cfg = OptConfig::new(objective, ConstraintMode::Area);
        cfg.schedule = vec![64];
        cfg.max_iter = 6;
        cfg
    }

    #[test]
    fn ascent_history_is_monotone_at_unit_area() {
        let st = OptState::new(perturbed_disk(), params(1.0, 0.5), short_run(1)).unwrap();
        let st = optimize(st).unwrap();
        assert!(st.history.len() > 1);
        for w in st.history.windows(2) {
            assert!(w[1].objective > w[0].objective);
        }
        for r in &st.history {
            assert!((r.area - 1.0).abs() < 1e-10, "{}", r.area);
        }
    }

    #[test]
    fn first_step_is_scale_invariant() {
        let pr = params(1.0, 0.5);
        let run = |b: Boundary| {
            let mut st = OptState::new(b, pr, short_run(1)).unwrap();
            assert!(st.step_once().unwrap());
            st.boundary.coefficients()
        };
        let a = run(perturbed_disk());
        let b = run(perturbed_disk().scaled(3.0).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "{x} {y}");
        }
    }

    #[test]
    fn convex_run_keeps_margin() {
        let mut p = FourierSeries::constant(0.6, 4);
        p.a[2] = 0.03;
        p.b[3] = 0.01;
        let b: Boundary = SupportBoundary::new(p).unwrap().into();
        let mut cfg = OptConfig::new(3, ConstraintMode::AreaConvex);
        cfg.schedule = vec![64];
        cfg.max_iter = 4;
        let st = optimize(OptState::new(b, params(1.0, 0.5), cfg).unwrap()).unwrap();
        for w in st.history.windows(2) {
            assert!(w[1].objective > w[0].objective);
        }
        assert!(st.history.iter().all(|r| r.margin.unwrap() >= -1e-10));
    }

    #[test]
    fn invalid_opt_config() {
        assert!(OptConfig::new(0, ConstraintMode::Area).validate().is_err());
        let mut c = OptConfig::new(1, ConstraintMode::Area);
        c.schedule.clear();
        assert!(c.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projection_is_feasible_and_idempotent(
            a0 in 0.2f64..2.0,
            modes in proptest::collection::vec(-0.3f64..0.3, 8),
        ) {
            let mut c = vec![a0];
            c.extend(modes);
            let p = project_convex(&c, 4, 256).unwrap();
            let m = convexity_margin(&SupportBoundary::new_unchecked(FourierSeries::from_slice(4, &p)), 256);
            prop_assert!(m >= -1e-10);
            let q = project_convex(&p, 4, 256).unwrap();
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            // never farther than the feasible point obtained by raising a₀
            let mut raised = c.clone();
            let m0 = convexity_margin(&SupportBoundary::new_unchecked(FourierSeries::from_slice(4, &c)), 256);
            raised[0] -= m0.min(0.0);
            let dist = |v: &[f64]| v.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            prop_assert!(dist(&p) <= dist(&raised) + 1e-12);
        }
    }
}
