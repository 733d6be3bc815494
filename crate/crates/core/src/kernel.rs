//! Hooke's law, strains and the plane Kelvin solution.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Matrix2, Result, Vector2};

/// Closer than this, kernel evaluation is refused.
pub const MIN_SEPARATION: f64 = 1e-12;

/// Lamé coefficients of an isotropic material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LameParameters {
    lambda: f64,
    mu: f64,
}

impl LameParameters {
    /// Requires finite values with `μ > 0` and `λ + μ > 0`.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        let reason = if !lambda.is_finite() || !mu.is_finite() {
            Some("coefficients must be finite")
        } else if mu <= 0.0 {
            Some("μ must be positive")
        } else if lambda + mu <= 0.0 {
            Some("λ + μ must be positive")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(Error::InvalidParameters { lambda, mu, reason }),
            None => Ok(Self { lambda, mu }),
        }
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Both coefficients multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.lambda * s, self.mu * s)
    }

    /// Prefactor `(λ+3μ) / (4πμ(λ+2μ))` of the Kelvin tensor.
    #[inline]
    fn c1(&self) -> f64 {
        let (l, m) = (self.lambda, self.mu);
        (l + 3.0 * m) / (4.0 * PI * m * (l + 2.0 * m))
    }

    /// Ratio `(λ+μ) / (λ+3μ)` of the Kelvin tensor.
    #[inline]
    fn c2(&self) -> f64 {
        let (l, m) = (self.lambda, self.mu);
        (l + m) / (l + 3.0 * m)
    }
}

/// `Aξ = 2μξ + λ tr(ξ) Id`
#[inline]
pub fn hooke(xi: &Matrix2, params: &LameParameters) -> Matrix2 {
    *xi * (2.0 * params.mu) + Matrix2::IDENTITY * (params.lambda * xi.trace())
}

/// Symmetrized gradient `½(∇u + ∇uᵀ)`.
#[inline]
pub fn strain(jacobian: &Matrix2) -> Matrix2 {
    jacobian.symmetric_part()
}

/// Traction `Ae(u)n` of a field with the given Jacobian.
#[inline]
pub fn traction(jacobian: &Matrix2, n: Vector2, params: &LameParameters) -> Vector2 {
    hooke(&strain(jacobian), params) * n
}

fn separation(x: Vector2, y: Vector2) -> Result<(Vector2, f64)> {
    let r = x - y;
    let rho2 = r.norm_squared();
    if !(rho2 >= MIN_SEPARATION * MIN_SEPARATION) {
        return Err(Error::SingularKernel(rho2.sqrt()));
    }
    Ok((r, rho2))
}

/// Kelvin tensor `Φ(x − y)`; column `k` is the displacement due to a unit
/// point force in direction `k` at `y`.
pub fn kelvin(x: Vector2, y: Vector2, params: &LameParameters) -> Result<Matrix2> {
    let (r, rho2) = separation(x, y)?;
    Ok(kelvin_at(r, rho2, params))
}

#[inline]
fn kelvin_at(r: Vector2, rho2: f64, params: &LameParameters) -> Matrix2 {
    let c1 = params.c1();
    let c2 = params.c2() / rho2;
    let diag = -0.5 * rho2.ln();
    let off = c1 * c2 * r.x * r.y;
    Matrix2::new(c1 * (diag + c2 * r.x * r.x), off, off, c1 * (diag + c2 * r.y * r.y))
}

/// Jacobians `∂_m Φ_ik(x − y)` of the two Kelvin columns, indexed `[k][i][m]`.
pub fn kelvin_jacobians(x: Vector2, y: Vector2, params: &LameParameters) -> Result<[Matrix2; 2]> {
    let (r, rho2) = separation(x, y)?;
    Ok(jacobians_at(r, rho2, params))
}

#[inline]
fn jacobians_at(r: Vector2, rho2: f64, params: &LameParameters) -> [Matrix2; 2] {
    let c1 = params.c1();
    let c2 = params.c2();
    let rr = [r.x, r.y];
    let inv = 1.0 / rho2;
    let mut out = [Matrix2::ZERO; 2];
    for (k, jac) in out.iter_mut().enumerate() {
        for i in 0..2 {
            for m in 0..2 {
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                let log_part = -d(i, k) * rr[m] * inv;
                let dyad = (d(i, m) * rr[k] + rr[i] * d(k, m)) * inv
                    - 2.0 * rr[i] * rr[k] * rr[m] * inv * inv;
                jac.m[i][m] = c1 * (log_part + c2 * dyad);
            }
        }
    }
    out
}

/// Tractions at `x` (outward normal `n`) of the two Kelvin columns; column
/// `k` of the result belongs to column `k` of [`kelvin`].
pub fn kelvin_traction(
    x: Vector2,
    y: Vector2,
    n: Vector2,
    params: &LameParameters,
) -> Result<Matrix2> {
    let (r, rho2) = separation(x, y)?;
    let [j0, j1] = jacobians_at(r, rho2, params);
    Ok(Matrix2::from_columns(
        traction(&j0, n, params),
        traction(&j1, n, params),
    ))
}

/// Kelvin tensor and traction in one pass, sharing the separation check.
pub fn kelvin_pair(
    x: Vector2,
    y: Vector2,
    n: Vector2,
    params: &LameParameters,
) -> Result<(Matrix2, Matrix2)> {
    let (r, rho2) = separation(x, y)?;
    let [j0, j1] = jacobians_at(r, rho2, params);
    Ok((
        kelvin_at(r, rho2, params),
        Matrix2::from_columns(traction(&j0, n, params), traction(&j1, n, params)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::TAU;
    use proptest::prelude::*;

    fn params(l: f64, m: f64) -> LameParameters {
        LameParameters::new(l, m).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(LameParameters::new(1.0, 0.5).is_ok());
        assert!(LameParameters::new(-0.5, 1.0).is_ok());
        assert!(LameParameters::new(1.0, 0.0).is_err());
        assert!(LameParameters::new(-1.0, 1.0).is_err());
        assert!(LameParameters::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn hooke_examples() {
        let p = params(1.0, 0.5);
        assert_eq!(hooke(&Matrix2::IDENTITY, &p), Matrix2::IDENTITY * 3.0);
        assert_eq!(hooke(&Matrix2::ZERO, &p), Matrix2::ZERO);
    }

    #[test]
    fn strain_examples() {
        // rotation (-x₂, x₁)
        assert_eq!(strain(&Matrix2::new(0.0, -1.0, 1.0, 0.0)), Matrix2::ZERO);
        let s = Matrix2::new(0.0, 1.0, 1.0, 0.0);
        assert_eq!(strain(&s), s);
        assert_eq!(
            strain(&Matrix2::new(1.0, 2.0, 0.0, 1.0)),
            Matrix2::new(1.0, 1.0, 1.0, 1.0)
        );
        // translations have zero Jacobian
        assert_eq!(strain(&Matrix2::ZERO), Matrix2::ZERO);
    }

    #[test]
    fn kelvin_on_axes() {
        let p = params(1.0, 1.0);
        let k = kelvin(Vector2::new(1.0, 0.0), Vector2::ZERO, &p).unwrap();
        let v = 1.0 / (6.0 * PI);
        assert!((k.m[0][0] - v).abs() < 1e-16);
        assert_eq!([k.m[0][1], k.m[1][0], k.m[1][1]], [0.0, 0.0, 0.0]);
        let k = kelvin(Vector2::new(0.0, 1.0), Vector2::ZERO, &p).unwrap();
        assert!((k.m[1][1] - v).abs() < 1e-16);
        assert_eq!([k.m[0][0], k.m[0][1], k.m[1][0]], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn coincident_points_fail() {
        let p = params(1.0, 1.0);
        let x = Vector2::new(0.3, 0.2);
        assert!(matches!(kelvin(x, x, &p), Err(Error::SingularKernel(_))));
        assert!(matches!(
            kelvin_traction(x, x, Vector2::new(1.0, 0.0), &p),
            Err(Error::SingularKernel(_))
        ));
    }

    #[test]
    fn kelvin_matches_textbook_form() {
        // plane-strain Kelvin solution written with Poisson's ratio
        let (l, m) = (1.3, 0.7);
        let nu = l / (2.0 * (l + m));
        let p = params(l, m);
        let r = Vector2::new(0.4, -1.1);
        let rho = r.norm();
        let k = kelvin(r, Vector2::ZERO, &p).unwrap();
        let pre = 1.0 / (8.0 * PI * m * (1.0 - nu));
        let rr = [r.x, r.y];
        for i in 0..2 {
            for j in 0..2 {
                let d = if i == j { 1.0 } else { 0.0 };
                let e = pre * (-(3.0 - 4.0 * nu) * rho.ln() * d + rr[i] * rr[j] / (rho * rho));
                assert!((k.m[i][j] - e).abs() < 1e-15, "{i}{j}");
            }
        }
    }

    /// Traction from central differences of the Kelvin columns.
    fn fd_traction(x: Vector2, y: Vector2, n: Vector2, p: &LameParameters) -> Matrix2 {
        let h = 1e-6 * (x - y).norm();
        let mut cols = [Vector2::ZERO; 2];
        for (k, col) in cols.iter_mut().enumerate() {
            let mut jac = Matrix2::ZERO;
            for (m, e) in [Vector2::new(h, 0.0), Vector2::new(0.0, h)].into_iter().enumerate() {
                let fp = kelvin(x + e, y, p).unwrap().column(k);
                let fm = kelvin(x - e, y, p).unwrap().column(k);
                let d = (fp - fm) * (0.5 / h);
                jac.m[0][m] = d.x;
                jac.m[1][m] = d.y;
            }
            *col = traction(&jac, n, p);
        }
        Matrix2::from_columns(cols[0], cols[1])
    }

    #[test]
    fn traction_homogeneous_of_degree_minus_one() {
        let p = params(1.0, 0.5);
        let y = Vector2::new(0.2, -0.1);
        let dir = Vector2::new(0.6, 0.8);
        let n = Vector2::new(-0.28, 0.96);
        let t1 = kelvin_traction(y + dir * 0.7, y, n, &p).unwrap();
        let t2 = kelvin_traction(y + dir * 1.4, y, n, &p).unwrap();
        assert!((t1 * 0.5 - t2).max_abs() < 1e-15 * t1.max_abs().max(1.0) * 10.0);
    }

    #[test]
    fn traction_flux_vanishes_away_from_source() {
        let p = params(2.0, 0.7);
        let y = Vector2::new(3.0, 1.0);
        let c = Vector2::new(0.1, 0.2);
        let rad = 0.5;
        let n_q = 256;
        let mut flux = Matrix2::ZERO;
        for q in 0..n_q {
            let t = TAU * q as f64 / n_q as f64;
            let nrm = Vector2::polar(t);
            flux += kelvin_traction(c + nrm * rad, y, nrm, &p).unwrap() * (rad * TAU / n_q as f64);
        }
        assert!(flux.max_abs() < 1e-14);
        // a circle around the source carries the unit point force
        let mut flux = Matrix2::ZERO;
        for q in 0..n_q {
            let t = TAU * q as f64 / n_q as f64;
            let nrm = Vector2::polar(t);
            flux += kelvin_traction(y + nrm * rad, y, nrm, &p).unwrap() * (rad * TAU / n_q as f64);
        }
        assert!((flux + Matrix2::IDENTITY).max_abs() < 1e-13);
    }

    #[test]
    fn kelvin_pair_agrees() {
        let p = params(0.3, 1.2);
        let (x, y, n) = (Vector2::new(0.5, 0.1), Vector2::new(-1.0, 2.0), Vector2::new(0.0, 1.0));
        let (k, t) = kelvin_pair(x, y, n, &p).unwrap();
        assert_eq!(k, kelvin(x, y, &p).unwrap());
        assert_eq!(t, kelvin_traction(x, y, n, &p).unwrap());
    }

    fn valid_params() -> impl Strategy<Value = LameParameters> {
        (0.05f64..10.0, -0.9f64..10.0).prop_map(|(mu, r)| params(r * mu, mu))
    }

    fn matrix() -> impl Strategy<Value = Matrix2> {
        proptest::array::uniform4(-10.0f64..10.0).prop_map(|a| Matrix2::new(a[0], a[1], a[2], a[3]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn traction_matches_finite_differences(p in valid_params(),
                                               x in proptest::array::uniform2(-2.0f64..2.0),
                                               y in proptest::array::uniform2(-2.0f64..2.0),
                                               angle in 0.0f64..TAU) {
            let (x, y) = (Vector2::new(x[0], x[1]), Vector2::new(y[0], y[1]));
            prop_assume!((x - y).norm() > 0.05);
            let n = Vector2::polar(angle);
            let exact = kelvin_traction(x, y, n, &p).unwrap();
            let fd = fd_traction(x, y, n, &p);
            prop_assert!((exact - fd).max_abs() <= 1e-6 * exact.max_abs());
        }

        #[test]
        fn linearity(p in valid_params(), a in -3.0f64..3.0, b in -3.0f64..3.0,
                     x in matrix(), y in matrix()) {
            let lhs = hooke(&(x * a + y * b), &p);
            let rhs = hooke(&x, &p) * a + hooke(&y, &p) * b;
            prop_assert!((lhs - rhs).max_abs() <= 1e-14 * (1.0 + lhs.max_abs()) * 10.0);
            let lhs = strain(&(x * a + y * b));
            let rhs = strain(&x) * a + strain(&y) * b;
            prop_assert!((lhs - rhs).max_abs() <= 1e-14 * (1.0 + lhs.max_abs()) * 10.0);
        }

        #[test]
        fn kelvin_symmetry(p in valid_params(),
                           x in proptest::array::uniform2(-2.0f64..2.0),
                           y in proptest::array::uniform2(-2.0f64..2.0)) {
            let (x, y) = (Vector2::new(x[0], x[1]), Vector2::new(y[0], y[1]));
            prop_assume!((x - y).norm() > 1e-6);
            let k = kelvin(x, y, &p).unwrap();
            prop_assert_eq!(k.m[0][1], k.m[1][0]);
            prop_assert_eq!(k, kelvin(y, x, &p).unwrap());
        }

        #[test]
        fn rigid_motions_have_no_strain(s in -5.0f64..5.0) {
            for jac in [Matrix2::ZERO, Matrix2::new(0.0, -s, s, 0.0)] {
                prop_assert_eq!(strain(&jac), Matrix2::ZERO);
            }
        }
    }
}
