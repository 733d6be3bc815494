//! Method of fundamental solutions for the Steklov-Lamé eigenproblem.
//!
//! The eigenfunction is expanded as `u(x) = Σ_j Φ(x − y_j) a_j` over sources
//! `y_j` outside the domain. Collocating the boundary relation at `x_i` gives
//! the rectangular pencil `A a = Λ B a`, with `A` built from Kelvin tractions
//! and `B` from the Kelvin tensor itself. With the thin factorization
//! `B = QR` the square pencil `(QᵀA, R)` is handed to a QZ solver.
//!
//! Each candidate is then certified: the boundary defect
//! `f = Ae(u)n − Λu` is measured on a grid finer than the collocation grid and
//! `‖f‖/‖u‖` bounds the distance from `Λ` to the true spectrum.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use faer::{Mat, MatRef};
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{discretize_with_phase, Boundary, DiscreteBoundary};
use crate::kernel::{kelvin, kelvin_jacobians, kelvin_pair};
use crate::{DisplacementField, Error, LameParameters, Matrix2, Result, Vector2};

/// Norms below this make a pair untrustworthy.
pub const MIN_TRACE_NORM: f64 = 1e-8;

/// Eigenvector bases are orthonormalized among values closer than this (relative).
const DEGENERATE_TOL: f64 = 1e-8;

/// How source points are pushed off the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceOffset {
    /// Fixed distance `α` along the outward normal.
    Absolute(f64),
    /// `α = r·√(|Ω|/π)`, a fraction `r` of the equal-area radius.
    Relative(f64),
}

impl SourceOffset {
    /// Offset length for `boundary`.
    pub fn length(&self, boundary: &Boundary) -> Result<f64> {
        match *self {
            SourceOffset::Absolute(a) => Ok(a),
            SourceOffset::Relative(r) => Ok(r * (boundary.area()? / PI).sqrt()),
        }
    }
}

/// Solver settings.
#[derive(Clone, Debug, PartialEq)]
pub struct MfsConfig {
    /// Number of sources `N`.
    pub n: usize,
    /// Number of collocation points `M`; `None` means `2N`.
    pub m: Option<usize>,
    pub offset: SourceOffset,
    /// Candidates with `|Im Λ| > im_tol·(1 + |Re Λ|)` are dropped.
    pub im_tol: f64,
    /// Values below `zero_tol` times the smallest retained scale count as rigid motions.
    pub zero_tol: f64,
    /// A value is certified when `‖f‖/‖u‖ ≤ residual_tol·max(1, Λ)`.
    pub residual_tol: f64,
    /// Candidates with `‖f‖/‖u‖ > spurious_tol·max(1, Λ)` are discarded as spurious.
    pub spurious_tol: f64,
    /// Residuals are measured on `fine_factor·N` boundary nodes.
    pub fine_factor: usize,
    /// Relative gap below which values are reported as one cluster.
    pub cluster_tol: f64,
    /// Singular values of the trace matrix below `rank_tol` times the largest
    /// are dropped before the eigensolve.
    pub rank_tol: f64,
    /// Shift of all parameter nodes.
    pub phase: f64,
}

impl MfsConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            m: None,
            offset: SourceOffset::Relative(0.3),
            im_tol: 1e-6,
            zero_tol: 1e-6,
            residual_tol: 1e-6,
            spurious_tol: 1e-2,
            fine_factor: 4,
            cluster_tol: 1e-4,
            rank_tol: 1e-13,
            phase: 0.0,
        }
    }

    pub fn with_offset(mut self, offset: SourceOffset) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn collocation_count(&self) -> usize {
        self.m.unwrap_or(2 * self.n)
    }

    pub fn fine_count(&self) -> usize {
        self.fine_factor * self.n
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.n < 8 {
            return bad(alloc::format!("need at least 8 sources, got {}", self.n));
        }
        if self.collocation_count() < self.n {
            return bad(alloc::format!(
                "collocation count {} is below the source count {}",
                self.collocation_count(),
                self.n
            ));
        }
        let off = match self.offset {
            SourceOffset::Absolute(a) | SourceOffset::Relative(a) => a,
        };
        if !(off > 0.0 && off.is_finite()) {
            return bad(alloc::format!("source offset must be positive, got {off}"));
        }
        for (name, v) in [
            ("im_tol", self.im_tol),
            ("zero_tol", self.zero_tol),
            ("residual_tol", self.residual_tol),
            ("spurious_tol", self.spurious_tol),
            ("cluster_tol", self.cluster_tol),
            ("rank_tol", self.rank_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(alloc::format!("{name} must be positive, got {v}"));
            }
        }
        if self.residual_tol > self.spurious_tol {
            return bad("residual_tol must not exceed spurious_tol".into());
        }
        if self.fine_factor < 2 {
            return bad("fine_factor must be at least 2".into());
        }
        Ok(())
    }
}

/// The collocation pencil: `A` holds tractions, `B` displacements.
///
/// Row `2i + c` is component `c` at collocation point `i`; column `2j + k`
/// is the `k`-th Kelvin column of source `j`.
#[derive(Clone, Debug)]
pub struct Pencil {
    pub a: Mat<f64>,
    pub b: Mat<f64>,
}

fn kernel_matrices(
    points: &[Vector2],
    normals: &[Vector2],
    sources: &[Vector2],
    params: &LameParameters,
) -> Result<Pencil> {
    let (m, n) = (points.len(), sources.len());
    let mut a = Mat::<f64>::zeros(2 * m, 2 * n);
    let mut b = Mat::<f64>::zeros(2 * m, 2 * n);
    for j in 0..n {
        for i in 0..m {
            let (phi, t) = kelvin_pair(points[i], sources[j], normals[i], params)?;
            for c in 0..2 {
                for k in 0..2 {
                    a[(2 * i + c, 2 * j + k)] = t.m[c][k];
                    b[(2 * i + c, 2 * j + k)] = phi.m[c][k];
                }
            }
        }
    }
    Ok(Pencil { a, b })
}

pub fn assemble(db: &DiscreteBoundary, params: &LameParameters) -> Result<Pencil> {
    kernel_matrices(&db.points, &db.normals, &db.sources, params)
}

/// 2-norm condition number of `m` from its singular values.
pub fn condition_number(m: MatRef<'_, f64>) -> Result<f64> {
    let s = m
        .singular_values()
        .map_err(|_| Error::Decomposition("singular value decomposition did not converge"))?;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max / min)
}

/// A certified eigenpair together with everything needed to evaluate it.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    /// `a_j` interleaved as `[a_1x, a_1y, a_2x, ...]`.
    pub coefficients: Vec<f64>,
    pub sources: Arc<[Vector2]>,
    pub params: LameParameters,
    /// `‖Ae(u)n − Λu‖` on the fine grid.
    pub residual: f64,
    /// `‖f‖/‖u‖`, an upper bound on the distance from `value` to the spectrum.
    pub bound: f64,
    /// Trace norm on the collocation grid (1 after normalization).
    pub boundary_norm: f64,
    /// Index of the cluster of nearly equal values this pair belongs to.
    pub cluster: usize,
    pub cluster_size: usize,
}

impl EigenPair {
    pub fn coefficient(&self, j: usize) -> Vector2 {
        Vector2::new(self.coefficients[2 * j], self.coefficients[2 * j + 1])
    }

    /// The same field with coefficients replaced, e.g. for linear combinations.
    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Self {
        Self {
            coefficients,
            ..self.clone()
        }
    }
}

impl DisplacementField for EigenPair {
    fn value(&self, x: Vector2) -> Result<Vector2> {
        let mut u = Vector2::ZERO;
        for (j, &y) in self.sources.iter().enumerate() {
            u += kelvin(x, y, &self.params)? * self.coefficient(j);
        }
        Ok(u)
    }

    fn jacobian(&self, x: Vector2) -> Result<Matrix2> {
        let mut jac = Matrix2::ZERO;
        for (j, &y) in self.sources.iter().enumerate() {
            let a = self.coefficient(j);
            let [j0, j1] = kelvin_jacobians(x, y, &self.params)?;
            jac += j0 * a.x + j1 * a.y;
        }
        Ok(jac)
    }
}

/// Field values at `points`.
pub fn eval_eigenfunction(pair: &EigenPair, points: &[Vector2]) -> Result<Vec<Vector2>> {
    points.iter().map(|&x| pair.value(x)).collect()
}

/// Solver output: certified pairs in ascending order plus filter statistics.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    /// Candidates classified as rigid motions.
    pub zero_count: usize,
    /// Candidates dropped as spurious (complex, negative, or large residual).
    pub spurious_count: usize,
    /// Source offset that was used.
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
}

impl Spectrum {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// Residual certificate of one approximate eigenpair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// `‖Ae(u)n − Λu‖_{L²(∂Ω)}`
    pub residual: f64,
    /// `‖u‖_{L²(∂Ω)}`
    pub norm: f64,
    /// `residual / norm`
    pub bound: f64,
}

/// Measures the boundary defect of `(value, u)` on `nodes` equally spaced
/// parameter values.
pub fn residual_certificate<F: DisplacementField>(
    u: &F,
    value: f64,
    boundary: &Boundary,
    params: &LameParameters,
    nodes: usize,
) -> Result<Certificate> {
    let h = TAU / nodes as f64;
    let (mut r2, mut n2) = (0.0, 0.0);
    for q in 0..nodes {
        let cp = boundary.eval(h * (q as f64 + 0.5))?;
        let uq = u.value(cp.point)?;
        let f = u.traction(cp.point, cp.normal, params)? - uq * value;
        let w = h * cp.speed;
        r2 += w * f.norm_squared();
        n2 += w * uq.norm_squared();
    }
    let (residual, norm) = (r2.sqrt(), n2.sqrt());
    if !(norm >= MIN_TRACE_NORM) {
        return Err(Error::UntrustworthyPair(norm));
    }
    Ok(Certificate {
        residual,
        norm,
        bound: residual / norm,
    })
}

/// Discretizes, assembles and solves for the `k` smallest positive eigenvalues.
pub fn solve(
    boundary: &Boundary,
    params: &LameParameters,
    config: &MfsConfig,
    k: usize,
) -> Result<Spectrum> {
    config.validate()?;
    let alpha = config.offset.length(boundary)?;
    let db = discretize_with_phase(
        boundary,
        config.collocation_count(),
        config.n,
        alpha,
        config.phase,
    )?;
    let pencil = assemble(&db, params)?;
    solve_spectrum(&pencil, &db, boundary, params, config, k)
}

struct Candidate {
    value: f64,
    coeffs: Vec<f64>,
    norm: f64,
    bound: f64,
    residual: f64,
    /// Copy of a neighbour standing in for a rejected vector of the same value.
    rescued: bool,
}

/// Solves an assembled pencil. See the module docs for the filtering policy.
pub fn solve_spectrum(
    pencil: &Pencil,
    db: &DiscreteBoundary,
    boundary: &Boundary,
    params: &LameParameters,
    config: &MfsConfig,
    k: usize,
) -> Result<Spectrum> {
    config.validate()?;
    if k == 0 {
        return Err(Error::InvalidConfig("requested eigenvalue count must be positive".into()));
    }
    let cols = pencil.b.ncols();
    let square = reduce(pencil, config.rank_tol)?;
    let (s_re, s_im, beta, u) = qz(square.a.as_ref(), square.b.as_ref())?;
    let u = square.lift(u);

    let mut spurious = 0usize;
    // (value, eigenvector column); complex pairs store their real and
    // imaginary parts in adjacent columns
    let mut real: Vec<(f64, usize)> = Vec::new();
    let mut j = 0;
    while j < s_re.len() {
        let width = if s_im[j] == 0.0 { 1 } else { 2 };
        let (re, im) = (s_re[j] / beta[j], s_im[j] / beta[j]);
        if beta[j] == 0.0
            || !(re.is_finite() && im.is_finite())
            || im.abs() > config.im_tol * (1.0 + re.abs())
        {
            spurious += width;
        } else {
            for c in 0..width {
                real.push((re, j + c));
            }
        }
        j += width;
    }

    // rigid motions: three values near zero, measured against the first genuine scale
    let mut mags: Vec<f64> = real.iter().map(|c| c.0.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let scale = mags.get(3).or(mags.last()).cloned().unwrap_or(1.0);
    let zero_cut = config.zero_tol * scale;
    let mut zero_count = 0;
    real.retain(|c| {
        if c.0.abs() < zero_cut {
            zero_count += 1;
            false
        } else if c.0 < 0.0 {
            spurious += 1;
            false
        } else {
            true
        }
    });
    real.sort_by(|a, b| a.0.total_cmp(&b.0));

    let m = db.m();
    let fine = fine_grid(boundary, config, &db.sources, params)?;
    let mut accepted: Vec<Candidate> = Vec::new();
    // values whose vector was rejected; a repeated eigenvalue may come with
    // one good vector and one poor one
    let mut orphans: Vec<f64> = Vec::new();
    let mut blocked = false;
    for chunk in real.chunks(32) {
        let mut v = Mat::<f64>::zeros(cols, chunk.len());
        for (c, &(_, j)) in chunk.iter().enumerate() {
            for i in 0..cols {
                v[(i, c)] = u[(i, j)];
            }
        }
        let trace = &pencil.b * &v;
        let ft = &fine.b * &v;
        let fa = &fine.a * &v;
        for (c, &(value, _)) in chunk.iter().enumerate() {
            let norm = weighted_norm(trace.as_ref(), c, &db.weights);
            if !(norm >= MIN_TRACE_NORM) || !norm.is_finite() {
                spurious += 1;
                orphans.push(value);
                continue;
            }
            let (res, fnorm) = defect(fa.as_ref(), ft.as_ref(), c, value, &fine.weights);
            let bound = res / fnorm;
            let scale = value.max(1.0);
            if !(bound <= config.spurious_tol * scale) {
                spurious += 1;
                orphans.push(value);
                continue;
            }
            if bound > config.residual_tol * scale {
                blocked = true;
                break;
            }
            let coeffs: Vec<f64> = (0..cols).map(|i| v[(i, c)] / norm).collect();
            accepted.push(Candidate {
                value,
                coeffs,
                norm: 1.0,
                bound,
                residual: res / norm,
                rescued: false,
            });
        }
        let complete = accepted.len() >= k && {
            let last = accepted[accepted.len() - 1].value;
            chunk.last().map(|c| c.0 > last * (1.0 + DEGENERATE_TOL)).unwrap_or(true)
        };
        if blocked || complete {
            break;
        }
    }

    // a rejected copy of an accepted value joins its cluster; the eigenspace is
    // then rebuilt from the pencil below
    for &value in &orphans {
        let twin = accepted
            .iter()
            .find(|c| (c.value - value).abs() <= DEGENERATE_TOL * value)
            .map(|c| Candidate {
                value,
                coeffs: c.coeffs.clone(),
                norm: c.norm,
                bound: c.bound,
                residual: c.residual,
                rescued: true,
            });
        if let Some(t) = twin {
            spurious -= 1;
            accepted.push(t);
        }
    }
    accepted.sort_by(|a, b| a.value.total_cmp(&b.value));

    // keep the first k values and whatever reported cluster straddles the cut
    let mut cut = k.min(accepted.len());
    while cut > 0
        && cut < accepted.len()
        && accepted[cut].value - accepted[cut - 1].value <= config.cluster_tol * accepted[cut].value
    {
        cut += 1;
    }
    accepted.truncate(cut);
    orthonormalize_degenerate(&mut accepted, pencil, db, &fine, &square)?;
    accepted.retain(|c| {
        let keep = !c.rescued || c.bound <= config.residual_tol * c.value.max(1.0);
        spurious += !keep as usize;
        keep
    });

    if accepted.len() < k {
        return Err(Error::InsufficientResolution {
            requested: k,
            survivors: accepted.len(),
        });
    }

    let sources: Arc<[Vector2]> = Arc::from(db.sources.as_slice());
    let mut pairs: Vec<EigenPair> = accepted
        .into_iter()
        .map(|c| EigenPair {
            value: c.value,
            coefficients: c.coeffs,
            sources: sources.clone(),
            params: *params,
            residual: c.residual,
            bound: c.bound,
            boundary_norm: c.norm,
            cluster: 0,
            cluster_size: 1,
        })
        .collect();
    // cluster sizes count members beyond the cut, so a split multiplet is visible
    assign_clusters(&mut pairs, config.cluster_tol);
    pairs.truncate(k);
    Ok(Spectrum {
        pairs,
        zero_count,
        spurious_count: spurious,
        alpha: db.alpha,
        n: db.n(),
        m,
    })
}

/// Square pencil `(QᵀA, R)` from the thin factorization `B = QR`, or its
/// restriction to the numerical range of `R` when `R` is singular to working
/// precision.
struct SquarePencil {
    a: Mat<f64>,
    b: Mat<f64>,
    /// Maps reduced coordinates back to source coefficients.
    basis: Option<Mat<f64>>,
}

impl SquarePencil {
    fn lift(&self, v: Mat<f64>) -> Mat<f64> {
        match &self.basis {
            Some(w) => w * &v,
            None => v,
        }
    }
}

fn reduce(pencil: &Pencil, rank_tol: f64) -> Result<SquarePencil> {
    let qr = pencil.b.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R().to_owned();
    let qa = q.transpose() * &pencil.a;
    let svd = r
        .svd()
        .map_err(|_| Error::Decomposition("singular value decomposition did not converge"))?;
    let sv = svd.S();
    let n = sv.dim();
    let top = (0..n).map(|i| sv[i]).fold(0.0, f64::max);
    let rank = (0..n).filter(|&i| sv[i] > rank_tol * top).count();
    if rank == n {
        return Ok(SquarePencil { a: qa, b: r, basis: None });
    }
    // R = UΣVᵀ: with a = V_r c the pencil becomes (U_rᵀQᵀA V_r, Σ_r)
    let keep: Vec<usize> = (0..n).filter(|&i| sv[i] > rank_tol * top).collect();
    let ur = Mat::<f64>::from_fn(n, rank, |i, c| svd.U()[(i, keep[c])]);
    let vr = Mat::<f64>::from_fn(n, rank, |i, c| svd.V()[(i, keep[c])]);
    let a = ur.transpose() * &qa * &vr;
    let b = Mat::<f64>::from_fn(rank, rank, |i, c| if i == c { sv[keep[i]] } else { 0.0 });
    Ok(SquarePencil { a, b, basis: Some(vr) })
}

/// `(Re α, Im α, β, right eigenvectors)`
type QzParts = (Vec<f64>, Vec<f64>, Vec<f64>, Mat<f64>);

/// Real QZ of `(a, b)`.
///
/// The unblocked QZ sweep is used throughout: faer's blocked variant with
/// aggressive early deflation can index past the active window.
fn qz(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<QzParts> {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::ComputeEigenvectors;
    use faer::linalg::gevd::{gevd_real, gevd_scratch, GevdParams};
    use faer::diag::Diag;

    let n = a.nrows();
    let mut params = <GevdParams as faer::Auto<f64>>::auto();
    params.schur.blocking_threshold = usize::MAX;
    let par = faer::get_global_parallelism();
    let mut s_re = Diag::<f64>::zeros(n);
    let mut s_im = Diag::<f64>::zeros(n);
    let mut beta = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let mut a = a.to_owned();
    let mut b = b.to_owned();
    let mut buf = MemBuffer::new(gevd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::Yes,
        par,
        params.into(),
    ));
    gevd_real(
        a.as_mut(),
        b.as_mut(),
        s_re.as_mut(),
        s_im.as_mut(),
        beta.as_mut(),
        None,
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        params.into(),
    )
    .map_err(|_| Error::Decomposition("QZ iteration did not converge"))?;
    let col = |d: &Diag<f64>| (0..n).map(|i| d[i]).collect::<Vec<f64>>();
    Ok((col(&s_re), col(&s_im), col(&beta), u))
}

struct FineGrid {
    a: Mat<f64>,
    b: Mat<f64>,
    weights: Vec<f64>,
}

fn fine_grid(
    boundary: &Boundary,
    config: &MfsConfig,
    sources: &[Vector2],
    params: &LameParameters,
) -> Result<FineGrid> {
    let nodes = config.fine_count();
    let h = TAU / nodes as f64;
    let mut pts = Vec::with_capacity(nodes);
    let mut nrm = Vec::with_capacity(nodes);
    let mut weights = Vec::with_capacity(nodes);
    for q in 0..nodes {
        // staggered against the collocation nodes
        let cp = boundary.eval(config.phase + h * (q as f64 + 0.5))?;
        pts.push(cp.point);
        nrm.push(cp.normal);
        weights.push(h * cp.speed);
    }
    let p = kernel_matrices(&pts, &nrm, sources, params)?;
    Ok(FineGrid {
        a: p.a,
        b: p.b,
        weights,
    })
}

fn weighted_norm(trace: MatRef<'_, f64>, c: usize, w: &[f64]) -> f64 {
    let s: f64 = w
        .iter()
        .enumerate()
        .map(|(i, wi)| wi * (trace[(2 * i, c)].powi(2) + trace[(2 * i + 1, c)].powi(2)))
        .sum();
    s.sqrt()
}

/// `(‖Ae(u)n − Λu‖, ‖u‖)` for column `c` on the fine grid.
fn defect(fa: MatRef<'_, f64>, ft: MatRef<'_, f64>, c: usize, value: f64, w: &[f64]) -> (f64, f64) {
    let (mut r2, mut n2) = (0.0, 0.0);
    for (i, wi) in w.iter().enumerate() {
        for comp in 0..2 {
            let row = 2 * i + comp;
            let f = fa[(row, c)] - value * ft[(row, c)];
            r2 += wi * f * f;
            n2 += wi * ft[(row, c)] * ft[(row, c)];
        }
    }
    (r2.sqrt(), n2.sqrt())
}

/// Gram-Schmidt in the boundary inner product among numerically equal values,
/// then re-certifies the rotated vectors.
///
/// QZ eigenvectors of a multiple eigenvalue can come out nearly parallel. In
/// that case the basis is replaced by the right singular vectors of
/// the square pencil at the cluster mean belonging to its smallest singular values.
fn orthonormalize_degenerate(
    pairs: &mut [Candidate],
    pencil: &Pencil,
    db: &DiscreteBoundary,
    fine: &FineGrid,
    square: &SquarePencil,
) -> Result<()> {
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len()
            && pairs[end].value - pairs[end - 1].value <= DEGENERATE_TOL * pairs[end].value
        {
            end += 1;
        }
        if end - start > 1 {
            let cols = pairs[start].coeffs.len();
            let size = end - start;
            let v = Mat::<f64>::from_fn(cols, size, |i, c| pairs[start + c].coeffs[i]);
            let v = match gram_schmidt(v, pencil, db) {
                Some(v) => v,
                None => {
                    let mean = pairs[start..end].iter().map(|p| p.value).sum::<f64>() / size as f64;
                    let shifted = &square.a - &square.b * faer::Scale(mean);
                    let svd = shifted
                        .svd()
                        .map_err(|_| Error::Decomposition("singular value decomposition did not converge"))?;
                    let sv = svd.S();
                    let dim = square.a.ncols();
                    let mut order: Vec<usize> = (0..dim).collect();
                    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
                    let null = Mat::<f64>::from_fn(dim, size, |i, c| svd.V()[(i, order[c])]);
                    gram_schmidt(square.lift(null), pencil, db).ok_or(Error::Decomposition(
                        "multiple eigenvalue has a rank-deficient eigenspace",
                    ))?
                }
            };
            let ft = &fine.b * &v;
            let fa = &fine.a * &v;
            for c in 0..size {
                let p = &mut pairs[start + c];
                let (res, fnorm) = defect(fa.as_ref(), ft.as_ref(), c, p.value, &fine.weights);
                p.coeffs = (0..cols).map(|i| v[(i, c)]).collect();
                p.residual = res;
                p.bound = res / fnorm;
                p.norm = 1.0;
            }
        }
        start = end;
    }
    Ok(())
}

/// Orthonormalizes the columns of `v` in the collocation inner product of
/// their traces; `None` if they are numerically dependent.
fn gram_schmidt(mut v: Mat<f64>, pencil: &Pencil, db: &DiscreteBoundary) -> Option<Mat<f64>> {
    let (cols, size) = (v.nrows(), v.ncols());
    for c in 0..size {
        let before = weighted_norm((&pencil.b * v.col(c)).as_mat(), 0, &db.weights);
        for _ in 0..2 {
            let tr = &pencil.b * &v;
            for d in 0..c {
                let ip = weighted_dot(tr.as_ref(), c, d, &db.weights);
                for i in 0..cols {
                    let vd = v[(i, d)];
                    v[(i, c)] -= ip * vd;
                }
            }
        }
        let nrm = weighted_norm((&pencil.b * v.col(c)).as_mat(), 0, &db.weights);
        if !(nrm > 1e-3 * before) {
            return None;
        }
        for i in 0..cols {
            v[(i, c)] /= nrm;
        }
    }
    Some(v)
}

fn weighted_dot(trace: MatRef<'_, f64>, a: usize, b: usize, w: &[f64]) -> f64 {
    w.iter()
        .enumerate()
        .map(|(i, wi)| {
            wi * (trace[(2 * i, a)] * trace[(2 * i, b)] + trace[(2 * i + 1, a)] * trace[(2 * i + 1, b)])
        })
        .sum()
}

fn assign_clusters(pairs: &mut [EigenPair], tol: f64) {
    let mut start = 0;
    let mut id = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].value - pairs[end - 1].value <= tol * pairs[end].value {
            end += 1;
        }
        for p in &mut pairs[start..end] {
            p.cluster = id;
            p.cluster_size = end - start;
        }
        id += 1;
        start = end;
    }
}

/// Boundary inner product `∮ u·v ds` by the trapezoidal rule.
pub fn boundary_inner<F: DisplacementField, G: DisplacementField>(
    u: &F,
    v: &G,
    boundary: &Boundary,
    nodes: usize,
) -> Result<f64> {
    let h = TAU / nodes as f64;
    let mut s = 0.0;
    for q in 0..nodes {
        let cp = boundary.eval(h * q as f64)?;
        s += h * cp.speed * u.value(cp.point)?.dot(v.value(cp.point)?);
    }
    Ok(s)
}

/// The three rigid motions `(1,0)`, `(0,1)`, `(−x₂, x₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RigidMotion {
    TranslationX,
    TranslationY,
    Rotation,
}

impl RigidMotion {
    pub const ALL: [RigidMotion; 3] = [Self::TranslationX, Self::TranslationY, Self::Rotation];
}

impl DisplacementField for RigidMotion {
    fn value(&self, x: Vector2) -> Result<Vector2> {
        Ok(match self {
            Self::TranslationX => Vector2::new(1.0, 0.0),
            Self::TranslationY => Vector2::new(0.0, 1.0),
            Self::Rotation => x.perp(),
        })
    }

    fn jacobian(&self, _x: Vector2) -> Result<Matrix2> {
        Ok(match self {
            Self::Rotation => Matrix2::new(0.0, -1.0, 1.0, 0.0),
            _ => Matrix2::ZERO,
        })
    }
}

/// Collocation-grid trace of the pair, `[u(x_1), u(x_2), ...]`.
pub fn trace(pair: &EigenPair, db: &DiscreteBoundary) -> Result<Vec<Vector2>> {
    eval_eigenfunction(pair, &db.points)
}
