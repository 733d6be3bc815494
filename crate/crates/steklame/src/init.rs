//! Seeded random initial shapes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklame_core::geometry::{Boundary, FourierBoundary, FourierSeries, SupportBoundary, CONVEXITY_GRID};
use steklame_core::shape::project_convex_with_margin;

use crate::config::Parametrization;
use crate::error::{CliError, Result};

/// Draws a smooth starting shape: unit circle plus modes `k ≥ 2` with
/// coefficients uniform in `±amplitude/k²`. Invalid draws are redrawn from
/// the same stream, so the result depends only on the arguments.
pub fn random_boundary(kind: Parametrization, order: usize, amplitude: f64, seed: u64) -> Result<Boundary> {
    if order == 0 || !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(CliError::Config("order must be positive and amplitude nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |k: usize| -> f64 { amplitude * rng.random_range(-1.0..=1.0) / (k * k) as f64 };
    for _ in 0..100 {
        match kind {
            Parametrization::Fourier => {
                let mut x = FourierSeries::constant(0.0, order);
                let mut y = FourierSeries::constant(0.0, order);
                x.a[0] = 1.0;
                y.b[0] = 1.0;
                for k in 2..=order {
                    x.a[k - 1] = draw(k);
                    x.b[k - 1] = draw(k);
                    y.a[k - 1] = draw(k);
                    y.b[k - 1] = draw(k);
                }
                if let Ok(b) = FourierBoundary::new(x, y) {
                    return Ok(b.into());
                }
            }
            Parametrization::Support => {
                let mut p = FourierSeries::constant(1.0, order);
                for k in 2..=order {
                    p.a[k - 1] = draw(k);
                    p.b[k - 1] = draw(k);
                }
                let c = project_convex_with_margin(&p.to_vec(), order, CONVEXITY_GRID, 0.05)?;
                if let Ok(b) = SupportBoundary::new(FourierSeries::from_slice(order, &c)) {
                    return Ok(b.into());
                }
            }
        }
    }
    Err(CliError::Config("amplitude too large to draw a simple curve".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_shape() {
        let a = random_boundary(Parametrization::Fourier, 5, 0.2, 11).unwrap();
        let b = random_boundary(Parametrization::Fourier, 5, 0.2, 11).unwrap();
        let c = random_boundary(Parametrization::Fourier, 5, 0.2, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn modes_decay_and_first_mode_is_fixed() {
        let b = random_boundary(Parametrization::Fourier, 4, 0.3, 3).unwrap();
        let c = b.coefficients();
        // x: a0, a1..a4, b1..b4
        assert_eq!((c[0], c[1], c[5]), (0.0, 1.0, 0.0));
        for (k, v) in c.iter().enumerate().take(5).skip(2) {
            assert!(v.abs() <= 0.3 / (k * k) as f64);
        }
    }

    #[test]
    fn support_draws_are_convex() {
        for seed in 0..5 {
            assert!(matches!(
                random_boundary(Parametrization::Support, 6, 2.0, seed).unwrap(),
                Boundary::Support(_)
            ));
        }
    }
}
