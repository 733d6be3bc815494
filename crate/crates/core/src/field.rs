use crate::kernel::{hooke, strain};
use crate::{LameParameters, Matrix2, Result, Vector2};

/// A displacement field that can be evaluated with its Jacobian
/// (`J[i][j] = ∂u_i/∂x_j`).
pub trait DisplacementField {
    fn value(&self, x: Vector2) -> Result<Vector2>;

    fn jacobian(&self, x: Vector2) -> Result<Matrix2>;

    /// Stress `Ae(u)` at `x`.
    fn stress(&self, x: Vector2, params: &LameParameters) -> Result<Matrix2> {
        Ok(hooke(&strain(&self.jacobian(x)?), params))
    }

    /// Traction `Ae(u)n` at `x`.
    fn traction(&self, x: Vector2, n: Vector2, params: &LameParameters) -> Result<Vector2> {
        Ok(self.stress(x, params)? * n)
    }
}

impl<F: DisplacementField + ?Sized> DisplacementField for &F {
    fn value(&self, x: Vector2) -> Result<Vector2> {
        (**self).value(x)
    }

    fn jacobian(&self, x: Vector2) -> Result<Matrix2> {
        (**self).jacobian(x)
    }
}
