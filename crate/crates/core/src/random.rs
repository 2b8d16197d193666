//! Seeded random instances for property checks and audits.

use num_complex::Complex64;
use rand::Rng;

use crate::scalar_functions::CircleFunction;
use crate::spectral::DenseOperator;
use crate::CMatrix;

fn gaussian_like<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Sum of uniforms; the exact distribution does not matter here.
    (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() * 0.5
}

fn complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(gaussian_like(rng), gaussian_like(rng))
}

/// General complex `n x n` operator.
pub fn general<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseOperator {
    DenseOperator::wrap(CMatrix::from_fn(n, n, |_, _| complex(rng)))
}

/// Hermitian operator with entries of size about `scale`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> DenseOperator {
    let g = CMatrix::from_fn(n, n, |_, _| complex(rng));
    DenseOperator::wrap((&g + g.adjoint()) * Complex64::new(0.5 * scale, 0.0))
}

/// Unitary operator from the QR factorization of a random complex matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseOperator {
    let g = CMatrix::from_fn(n, n, |_, _| complex(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix column phases so the distribution does not depend on the QR convention.
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    DenseOperator::wrap(q)
}

/// Trigonometric polynomial with random coefficients on `[-degree, degree]`
/// (or `[0, degree]` when `analytic`), scaled so that `sum |c_n| = 1`.
pub fn trig_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    degree: usize,
    analytic: bool,
) -> CircleFunction {
    let lo = if analytic { 0 } else { -(degree as i64) };
    let coeffs: Vec<(i64, Complex64)> = (lo..=degree as i64).map(|n| (n, complex(rng))).collect();
    let total: f64 = coeffs.iter().map(|(_, c)| c.norm()).sum();
    CircleFunction::new(coeffs.into_iter().map(|(n, c)| (n, c / total.max(1e-300))))
}

/// A grid of `n` random points on the unit circle.
pub fn circle_grid<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            Complex64::from_polar(
                1.0,
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
        })
        .collect()
}
