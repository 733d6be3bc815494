//! Closed-form Steklov-Lamé spectrum and eigenfunctions of a disk.
//!
//! With `c = λ + 3μ` and `s = λ + μ`, the nonzero eigenvalues of the disk of
//! radius `R` are
//!
//! | branch | value | multiplicity |
//! |---|---|---|
//! | radial | `2s/R` | 1 |
//! | n = 1 | `4μs/(cR)` | 2 |
//! | low, n ≥ 2 | `2μ(n−1)/R` | 2 |
//! | high, n ≥ 2 | `2(n+1)μs/(cR)` | 2 |
//!
//! plus the value 0 on the three rigid motions. Eigenfunctions are written as
//! complex polynomials `u₁ + i u₂ = Σ c z^a z̄^b`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{DisplacementField, Error, LameParameters, Matrix2, Result, Vector2};

/// Relative tolerance under which eigenvalues from different branches merge.
pub const MERGE_TOL: f64 = 1e-12;

/// Eigenvalue family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Rigid motions, eigenvalue 0.
    Zero,
    /// Dilation `u = x`.
    Radial,
    /// `4μ(λ+μ)/((λ+3μ)R)`
    N1,
    /// `2μ(n−1)/R`, `n ≥ 2`
    Low(u32),
    /// `2(n+1)μ(λ+μ)/((λ+3μ)R)`, `n ≥ 2`
    High(u32),
}

impl Branch {
    /// Number of independent eigenfunctions on this branch.
    pub fn multiplicity(&self) -> usize {
        match self {
            Branch::Zero => 3,
            Branch::Radial => 1,
            _ => 2,
        }
    }

    pub fn value(&self, r: f64, params: &LameParameters) -> Result<f64> {
        let (l, m) = (params.lambda(), params.mu());
        let s = l + m;
        let c = l + 3.0 * m;
        Ok(match *self {
            Branch::Zero => 0.0,
            Branch::Radial => 2.0 * s / r,
            Branch::N1 => 4.0 * m * s / (c * r),
            Branch::Low(n) if n >= 2 => 2.0 * m * (n - 1) as f64 / r,
            Branch::High(n) if n >= 2 => 2.0 * (n + 1) as f64 * m * s / (c * r),
            _ => return Err(Error::InvalidMode("low and high branches need n ≥ 2")),
        })
    }

    /// Short label used in tables: `zero`, `ii`, `iii`, `iv`, `v`.
    pub fn label(&self) -> &'static str {
        match self {
            Branch::Zero => "zero",
            Branch::Radial => "ii",
            Branch::N1 => "iii",
            Branch::Low(_) => "iv",
            Branch::High(_) => "v",
        }
    }

    /// Mode number where one applies.
    pub fn mode(&self) -> Option<u32> {
        match *self {
            Branch::N1 => Some(1),
            Branch::Low(n) | Branch::High(n) => Some(n),
            _ => None,
        }
    }
}

/// One positive disk eigenvalue, repeated once per eigenfunction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskEigenvalue {
    pub value: f64,
    pub branch: Branch,
    /// Size of the group of equal values this entry belongs to, summed
    /// across branches.
    pub multiplicity: usize,
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(alloc::format!("radius must be positive, got {r}")))
    }
}

/// The `k` smallest positive eigenvalues of the disk of radius `r`, counted
/// with multiplicity, in ascending order.
pub fn disk_spectrum(r: f64, params: &LameParameters, k: usize) -> Result<Vec<DiskEigenvalue>> {
    check_radius(r)?;
    let mut cand: Vec<(f64, Branch)> = Vec::new();
    for b in [Branch::Radial, Branch::N1] {
        for _ in 0..b.multiplicity() {
            cand.push((b.value(r, params)?, b));
        }
    }
    // Both n-branches grow with n: stop once neither can undercut the k-th value.
    let mut n = 2u32;
    loop {
        let low = Branch::Low(n).value(r, params)?;
        let high = Branch::High(n).value(r, params)?;
        if cand.len() > k {
            cand.sort_by(|a, b| a.0.total_cmp(&b.0));
            // one beyond k so a tie at the cut is still counted in the multiplicity
            let kth = cand[k].0;
            if low > kth * (1.0 + MERGE_TOL) && high > kth * (1.0 + MERGE_TOL) {
                break;
            }
        }
        for b in [Branch::Low(n), Branch::High(n)] {
            let v = if matches!(b, Branch::Low(_)) { low } else { high };
            cand.push((v, b));
            cand.push((v, b));
        }
        n += 1;
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(branch_rank(&a.1).cmp(&branch_rank(&b.1))));
    let mut out: Vec<DiskEigenvalue> = Vec::with_capacity(cand.len());
    let mut start = 0;
    for i in 1..=cand.len() {
        let split = i == cand.len() || {
            let (a, b) = (cand[i - 1].0, cand[i].0);
            (b - a).abs() > MERGE_TOL * a.abs().max(b.abs())
        };
        if split {
            for &(value, branch) in &cand[start..i] {
                out.push(DiskEigenvalue {
                    value,
                    branch,
                    multiplicity: i - start,
                });
            }
            start = i;
        }
    }
    out.truncate(k);
    Ok(out)
}

fn branch_rank(b: &Branch) -> (u8, u32) {
    match *b {
        Branch::Zero => (0, 0),
        Branch::Radial => (1, 0),
        Branch::N1 => (2, 1),
        Branch::Low(n) => (3, n),
        Branch::High(n) => (4, n),
    }
}

/// Smallest positive eigenvalue and the branch attaining it.
pub fn first_positive(r: f64, params: &LameParameters) -> Result<(f64, Branch)> {
    check_radius(r)?;
    let b = if params.lambda() > params.mu() {
        Branch::Low(2)
    } else {
        Branch::N1
    };
    Ok((b.value(r, params)?, b))
}

/// Which ordering holds between `c₂` (radial), `c₃` (n = 1) and `c₄` (low, n = 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderingRegion {
    /// `λ < −3μ`: `c₂ ≤ c₄ ≤ c₃`. Not reachable with valid parameters.
    BelowMinusThreeMu,
    /// `λ ≥ μ`: `c₄ ≤ c₃ ≤ c₂`.
    LambdaAtLeastMu,
    /// `−3μ < λ ≤ 0`: `c₃ ≤ c₂ ≤ c₄`.
    NonPositiveLambda,
    /// `0 < λ ≤ μ`: `c₃ ≤ c₄ ≤ c₂`.
    SmallPositiveLambda,
}

impl OrderingRegion {
    /// Classifies any `(λ, μ)` with `μ > 0` and `λ ≠ −3μ`.
    pub fn classify(lambda: f64, mu: f64) -> Option<Self> {
        if !(mu > 0.0) || !lambda.is_finite() {
            return None;
        }
        Some(if lambda >= mu {
            Self::LambdaAtLeastMu
        } else if lambda > 0.0 {
            Self::SmallPositiveLambda
        } else if lambda > -3.0 * mu {
            Self::NonPositiveLambda
        } else if lambda < -3.0 * mu {
            Self::BelowMinusThreeMu
        } else {
            return None;
        })
    }

    /// The three branches in ascending order of their smallest value.
    pub fn ascending(&self) -> [Branch; 3] {
        let (c2, c3, c4) = (Branch::Radial, Branch::N1, Branch::Low(2));
        match self {
            Self::BelowMinusThreeMu => [c2, c4, c3],
            Self::LambdaAtLeastMu => [c4, c3, c2],
            Self::NonPositiveLambda => [c3, c2, c4],
            Self::SmallPositiveLambda => [c3, c4, c2],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::BelowMinusThreeMu => "lambda < -3mu",
            Self::LambdaAtLeastMu => "lambda >= mu",
            Self::NonPositiveLambda => "-3mu < lambda <= 0",
            Self::SmallPositiveLambda => "0 < lambda <= mu",
        }
    }
}

pub fn ordering_region(params: &LameParameters) -> OrderingRegion {
    OrderingRegion::classify(params.lambda(), params.mu())
        .expect("valid Lamé parameters always fall in a region")
}

/// Scalar Steklov eigenvalue `σ_k` of the disk: `σ₀ = 0`, `σ_{2j−1} = σ_{2j} = j/R`.
pub fn scalar_steklov_disk(r: f64, k: usize) -> f64 {
    k.div_ceil(2) as f64 / r
}

/// Analytic disk eigenfunction, `u₁ + i u₂ = scale · Σ c z^a z̄^b`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskEigenfunction {
    branch: Branch,
    value: f64,
    radius: f64,
    terms: Vec<(Complex64, u32, u32)>,
    scale: f64,
}

/// Eigenfunction number `component` (below the branch multiplicity) of `branch`.
pub fn disk_eigenfunction(
    branch: Branch,
    component: usize,
    r: f64,
    params: &LameParameters,
) -> Result<DiskEigenfunction> {
    check_radius(r)?;
    let value = branch.value(r, params)?;
    if component >= branch.multiplicity() {
        return Err(Error::InvalidMode("component exceeds branch multiplicity"));
    }
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let terms = match branch {
        Branch::Zero => match component {
            0 => alloc::vec![(one, 0, 0)],
            1 => alloc::vec![(i, 0, 0)],
            _ => alloc::vec![(i, 1, 0)],
        },
        Branch::Radial => alloc::vec![(one, 1, 0)],
        Branch::Low(n) => {
            let c = if component == 0 { one } else { i };
            alloc::vec![(c, 0, n - 1)]
        }
        Branch::N1 | Branch::High(_) => {
            let n = branch.mode().expect("mode") as f64;
            let nu = branch.mode().expect("mode");
            let a = -(n + 1.0) / n;
            let b = (n + 1.0) * r * r / n;
            let c = (params.lambda() + 3.0 * params.mu()) / ((params.lambda() + params.mu()) * n);
            if component == 0 {
                alloc::vec![(one * a, 1, nu), (one * b, 0, nu - 1), (one * c, nu + 1, 0)]
            } else {
                alloc::vec![(i * -a, 1, nu), (i * -b, 0, nu - 1), (i * c, nu + 1, 0)]
            }
        }
    };
    Ok(DiskEigenfunction {
        branch,
        value,
        radius: r,
        terms,
        scale: 1.0,
    })
}

impl DiskEigenfunction {
    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Associated eigenvalue.
    pub fn eigenvalue(&self) -> f64 {
        self.value
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn complex_value(&self, x: Vector2) -> (Complex64, Complex64, Complex64) {
        let z = Complex64::new(x.x, x.y);
        let zb = z.conj();
        let mut w = Complex64::new(0.0, 0.0);
        let mut dz = w;
        let mut dzb = w;
        for &(c, a, b) in &self.terms {
            w += c * z.powu(a) * zb.powu(b);
            if a > 0 {
                dz += c * a as f64 * z.powu(a - 1) * zb.powu(b);
            }
            if b > 0 {
                dzb += c * b as f64 * z.powu(a) * zb.powu(b - 1);
            }
        }
        (w * self.scale, dz * self.scale, dzb * self.scale)
    }

    /// Boundary `L²` norm by the trapezoidal rule with `nodes` points.
    pub fn boundary_norm(&self, nodes: usize) -> f64 {
        let h = TAU / nodes as f64;
        let s: f64 = (0..nodes)
            .map(|q| {
                let x = Vector2::polar(h * q as f64) * self.radius;
                self.complex_value(x).0.norm_sqr()
            })
            .sum();
        (s * h * self.radius).sqrt()
    }

    /// Copy scaled to unit boundary `L²` norm.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        // the integrand is a trigonometric polynomial of low degree
        let deg = self.terms.iter().map(|t| t.1 + t.2).max().unwrap_or(0) as usize;
        out.scale /= self.boundary_norm(4 * deg + 16);
        out
    }
}

impl DisplacementField for DiskEigenfunction {
    fn value(&self, x: Vector2) -> Result<Vector2> {
        let w = self.complex_value(x).0;
        Ok(Vector2::new(w.re, w.im))
    }

    fn jacobian(&self, x: Vector2) -> Result<Matrix2> {
        let (_, dz, dzb) = self.complex_value(x);
        let dx = dz + dzb;
        let dy = Complex64::new(0.0, 1.0) * (dz - dzb);
        Ok(Matrix2::new(dx.re, dy.re, dx.im, dy.im))
    }
}
