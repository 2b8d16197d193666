//! Central finite differences with Richardson extrapolation, applied entrywise
//! to matrix-valued functions of one real variable.

use num_complex::Complex64;

use crate::{CMatrix, Error, Result};

/// Central-difference weights of accuracy order 4, offsets `-r..=r`.
fn central_weights(order: usize) -> Result<&'static [f64]> {
    Ok(match order {
        1 => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        2 => &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        3 => &[
            1.0 / 8.0,
            -1.0,
            13.0 / 8.0,
            0.0,
            -13.0 / 8.0,
            1.0,
            -1.0 / 8.0,
        ],
        4 => &[
            -1.0 / 6.0,
            2.0,
            -13.0 / 2.0,
            28.0 / 3.0,
            -13.0 / 2.0,
            2.0,
            -1.0 / 6.0,
        ],
        _ => {
            return Err(Error::Budget(format!(
                "finite differences support derivative orders 1..=4, got {order}"
            )))
        }
    })
}

/// Starting step for `richardson_derivative`. Rounding in the stencil grows
/// like `eps / h^order` while the extrapolated truncation error is `O(h^8)`,
/// so the balance point moves outward with the order.
pub fn default_step(order: usize) -> f64 {
    match order {
        0..=2 => 1e-2,
        3 => 5e-2,
        _ => 1e-1,
    }
}

/// One stencil application at step `h`.
pub fn central_difference(f: &impl Fn(f64) -> CMatrix, order: usize, h: f64) -> Result<CMatrix> {
    let w = central_weights(order)?;
    let r = (w.len() / 2) as i64;
    let mut acc: Option<CMatrix> = None;
    for (k, &wk) in (-r..=r).zip(w) {
        if wk == 0.0 {
            continue;
        }
        let term = f(k as f64 * h) * num_complex::Complex64::new(wk, 0.0);
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    let a = acc.expect("stencil has nonzero weights");
    Ok(a / num_complex::Complex64::new(h.powi(order as i32), 0.0))
}

/// `order`-th derivative at 0 from steps `h0, h0/2, h0/4` with two Richardson
/// levels (the fourth-order stencil has an even error expansion `h^4, h^6, ...`).
/// Returns the extrapolated value and the size of the last correction, which
/// serves as an error estimate.
pub fn richardson_derivative(
    f: &impl Fn(f64) -> CMatrix,
    order: usize,
    h0: f64,
) -> Result<(CMatrix, f64)> {
    let d0 = central_difference(f, order, h0)?;
    let d1 = central_difference(f, order, h0 / 2.0)?;
    let d2 = central_difference(f, order, h0 / 4.0)?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let r01 = (&d1 * c(16.0) - &d0) / c(15.0);
    let r12 = (&d2 * c(16.0) - &d1) / c(15.0);
    let best = (&r12 * c(64.0) - &r01) / c(63.0);
    let estimate = crate::spectral::frobenius(&(&best - &r12));
    Ok((best, estimate))
}
