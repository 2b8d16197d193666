//! Oracles shared by the integration tests. None of them go through the
//! library's eigendecompositions or divided-difference tables.
#![allow(dead_code)]

use num_complex::Complex64;
use opint::scalar_functions::{CircleFunction, ScalarFunction};
use opint::CMatrix;

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `exp(X)` by scaling and squaring with a 24-term Taylor polynomial.
pub fn expm(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let norm = x.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = x / c(2f64.powi(squarings as i32));
    let mut term = eye(n);
    let mut acc = eye(n);
    for k in 1..=24 {
        term = &term * &scaled / c(k as f64);
        acc += &term;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

/// `phi(X)` for Hermitian `X` without any eigendecomposition.
pub fn line_function(phi: &ScalarFunction, x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let i = Complex64::new(0.0, 1.0);
    match phi {
        ScalarFunction::Polynomial(coeffs) => {
            let mut acc = CMatrix::zeros(n, n);
            for &cf in coeffs.iter().rev() {
                acc = &acc * x + eye(n) * c(cf);
            }
            acc
        }
        ScalarFunction::Exp(r) => expm(&(x * c(*r))),
        ScalarFunction::Sin(r) => (expm(&(x * (i * *r))) - expm(&(x * (-i * *r)))) / (i * 2.0),
        ScalarFunction::Cos(r) => (expm(&(x * (i * *r))) + expm(&(x * (-i * *r)))) / c(2.0),
    }
}

/// `phi(V)` for unitary `V` as a Laurent polynomial.
pub fn circle_function(phi: &CircleFunction, v: &CMatrix) -> CMatrix {
    let n = v.nrows();
    let vinv = v.adjoint();
    let mut acc = CMatrix::zeros(n, n);
    for (&k, &cf) in phi.coefficients() {
        let base = if k >= 0 { v } else { &vinv };
        let mut p = eye(n);
        for _ in 0..k.unsigned_abs() {
            p = &p * base;
        }
        acc += p * cf;
    }
    acc
}

/// Sum of all words of length `p` in `{A, K}` with `m` letters `K`, times `m!`.
pub fn word_sum(a: &CMatrix, k: &CMatrix, p: usize, m: usize) -> CMatrix {
    fn rec(a: &CMatrix, k: &CMatrix, left: usize, ks: usize, prefix: CMatrix, acc: &mut CMatrix) {
        if left == 0 {
            if ks == 0 {
                *acc += prefix;
            }
            return;
        }
        if ks > 0 {
            rec(a, k, left - 1, ks - 1, &prefix * k, acc);
        }
        if left > ks {
            rec(a, k, left - 1, ks, &prefix * a, acc);
        }
    }
    let n = a.nrows();
    let mut acc = CMatrix::zeros(n, n);
    rec(a, k, p, m, eye(n), &mut acc);
    acc * c((1..=m).map(|x| x as f64).product())
}

/// Fourth-order central differences with two Richardson levels, written out
/// independently of the library.
pub fn fd_derivative(f: &dyn Fn(f64) -> CMatrix, m: usize, h0: f64) -> CMatrix {
    let stencil: &[(i32, f64)] = match m {
        1 => &[
            (-2, 1.0 / 12.0),
            (-1, -2.0 / 3.0),
            (1, 2.0 / 3.0),
            (2, -1.0 / 12.0),
        ],
        2 => &[
            (-2, -1.0 / 12.0),
            (-1, 4.0 / 3.0),
            (0, -2.5),
            (1, 4.0 / 3.0),
            (2, -1.0 / 12.0),
        ],
        3 => &[
            (-3, 1.0 / 8.0),
            (-2, -1.0),
            (-1, 13.0 / 8.0),
            (1, -13.0 / 8.0),
            (2, 1.0),
            (3, -1.0 / 8.0),
        ],
        _ => panic!("order {m} not supported"),
    };
    let d = |h: f64| -> CMatrix {
        let mut acc = f(0.0) * c(0.0);
        for &(j, w) in stencil {
            acc += f(j as f64 * h) * c(w);
        }
        acc / c(h.powi(m as i32))
    };
    let (d0, d1, d2) = (d(h0), d(h0 / 2.0), d(h0 / 4.0));
    let r01 = (&d1 * c(16.0) - &d0) / c(15.0);
    let r12 = (&d2 * c(16.0) - &d1) / c(15.0);
    (&r12 * c(64.0) - &r01) / c(63.0)
}

/// Divided difference of distinct nodes by the explicit sum
/// `sum_i phi(l_i) / prod_{j != i} (l_i - l_j)`.
pub fn dd_explicit(phi: &dyn Fn(Complex64) -> Complex64, nodes: &[Complex64]) -> Complex64 {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &li)| {
            let den: Complex64 = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &lj)| li - lj)
                .product();
            phi(li) / den
        })
        .sum()
}

/// `sum_{i,j,k>=0} c(i+j+k+2) z1^i z2^j z3^k + sum_{i,j,k<=-1} c(i+j+k+2) z1^i z2^j z3^k`
/// by direct nested loops.
pub fn dd2_triple_sum(phi: &CircleFunction, z: [Complex64; 3]) -> Complex64 {
    let d = phi.degree() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=d {
        for j in 0..=d {
            for k in 0..=d {
                acc += phi.coefficient(i + j + k + 2)
                    * z[0].powi(i as i32)
                    * z[1].powi(j as i32)
                    * z[2].powi(k as i32);
            }
        }
    }
    for i in -d - 2..=-1 {
        for j in -d - 2..=-1 {
            for k in -d - 2..=-1 {
                acc += phi.coefficient(i + j + k + 2)
                    * z[0].powi(i as i32)
                    * z[1].powi(j as i32)
                    * z[2].powi(k as i32);
            }
        }
    }
    acc
}

/// Largest singular value, from nalgebra's SVD.
pub fn opnorm(x: &CMatrix) -> f64 {
    x.clone().svd(false, false).singular_values.max()
}

/// `||x - y||_op / max(1, ||x||_op)`
pub fn rel(x: &CMatrix, y: &CMatrix) -> f64 {
    opnorm(&(x - y)) / opnorm(x).max(1.0)
}
