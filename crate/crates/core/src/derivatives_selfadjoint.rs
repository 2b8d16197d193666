//! Derivatives of `t -> phi(A + tK)` for Hermitian `A`, `K`.
//!
//! The formula side evaluates operator integrals of divided differences; the
//! oracle side uses either finite differences of the functional calculus or,
//! for monomials, the exact expansion of `(A + tK)^p` into words.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;

use crate::finite_difference::{default_step, richardson_derivative};
use crate::moi::{doi_eval, moi_eval};
use crate::scalar_functions::{dd_tensor, dd_tensor_mixed, ScalarFunction};
use crate::spectral::{
    apply_function, decompose_hermitian, operator_norm, DenseOperator, SpectralDecomposition,
};
use crate::{CMatrix, Error, Result};

/// Largest monomial degree the word-sum oracle accepts.
pub const MONOMIAL_ORACLE_MAX_DEGREE: usize = 8;

/// A formula result together with independent oracle values and residuals.
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub order: usize,
    pub formula: DenseOperator,
    pub oracles: BTreeMap<String, DenseOperator>,
    /// `||formula - oracle||_op / max(1, ||formula||_op)` per oracle.
    pub residuals: BTreeMap<String, f64>,
    /// Wall time per path in microseconds.
    pub timings_us: BTreeMap<String, u128>,
}

impl DerivativeReport {
    pub fn new(order: usize, formula: DenseOperator, elapsed_us: u128) -> Self {
        let mut timings_us = BTreeMap::new();
        timings_us.insert("formula".to_string(), elapsed_us);
        DerivativeReport {
            order,
            formula,
            oracles: BTreeMap::new(),
            residuals: BTreeMap::new(),
            timings_us,
        }
    }

    pub fn add_oracle(&mut self, name: &str, value: DenseOperator, elapsed_us: u128) {
        let r = relative_residual(&self.formula, &value);
        self.residuals.insert(name.to_string(), r);
        self.oracles.insert(name.to_string(), value);
        self.timings_us.insert(name.to_string(), elapsed_us);
    }

    /// Recomputes a stored residual from the stored operators.
    pub fn recompute_residual(&self, name: &str) -> Option<f64> {
        self.oracles
            .get(name)
            .map(|o| relative_residual(&self.formula, o))
    }
}

/// `||x - y||_op / max(1, ||x||_op)`
pub fn relative_residual(x: &DenseOperator, y: &DenseOperator) -> f64 {
    operator_norm(&(x.matrix() - y.matrix())) / x.operator_norm().max(1.0)
}

fn check_pair(a: &DenseOperator, k: &DenseOperator) -> Result<()> {
    if a.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            context: "A and K",
            expected: a.dim(),
            found: k.dim(),
        });
    }
    k.validate_hermitian()
}

fn sum(a: &DenseOperator, k: &DenseOperator) -> Result<DenseOperator> {
    DenseOperator::new(a.matrix() + k.matrix())
}

/// `phi(A + K) - phi(A)` as the double operator integral of `dg phi` against
/// `E_{A+K}` on the left and `E_A` on the right.
pub fn perturbation_difference(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
) -> Result<DenseOperator> {
    check_pair(a, k)?;
    let da = decompose_hermitian(a)?;
    let dak = decompose_hermitian(&sum(a, k)?)?;
    let psi = dd_tensor_mixed(
        phi,
        &[dak.eigenvalues().to_vec(), da.eigenvalues().to_vec()],
    );
    Ok(doi_eval(&psi, &dak, k, &da)?.operator)
}

/// `phi(A + K) - phi(A)` by functional calculus.
pub fn functional_difference(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
) -> Result<DenseOperator> {
    check_pair(a, k)?;
    let da = decompose_hermitian(a)?;
    let dak = decompose_hermitian(&sum(a, k)?)?;
    let diff = apply_function(&dak, phi)?.into_matrix() - apply_function(&da, phi)?.into_matrix();
    Ok(DenseOperator::wrap(diff))
}

/// First derivative as the double operator integral of `dg phi` over `E_A` twice.
pub fn first_derivative(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
) -> Result<DenseOperator> {
    check_pair(a, k)?;
    let da = decompose_hermitian(a)?;
    let psi = dd_tensor(phi, da.eigenvalues(), 1);
    Ok(doi_eval(&psi, &da, k, &da)?.operator)
}

/// `m! * int ... int dg^m phi dE_A K dE_A ... K dE_A`.
pub fn higher_derivative(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
    m: usize,
) -> Result<DenseOperator> {
    check_pair(a, k)?;
    let da = decompose_hermitian(a)?;
    higher_derivative_from(phi, &da, k, m)
}

pub(crate) fn higher_derivative_from(
    phi: &ScalarFunction,
    da: &SpectralDecomposition,
    k: &DenseOperator,
    m: usize,
) -> Result<DenseOperator> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "derivative order must be at least 1".into(),
        ));
    }
    let psi = dd_tensor(phi, da.eigenvalues(), m);
    let decomps = vec![da; m + 1];
    let ts = vec![k; m];
    let r = moi_eval(&psi, &decomps, &ts)?;
    let fact: f64 = (1..=m).map(|x| x as f64).product();
    Ok(DenseOperator::wrap(
        r.operator.into_matrix() * Complex64::new(fact, 0.0),
    ))
}

/// Finite-difference derivative of `t -> phi(A + tK)` at 0 (central stencil of
/// accuracy 4 with two Richardson levels over `h0, h0/2, h0/4`).
pub fn fd_oracle(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
    m: usize,
    h0: f64,
) -> Result<DenseOperator> {
    Ok(fd_oracle_with_estimate(phi, a, k, m, h0)?.0)
}

/// As [`fd_oracle`], also returning the Richardson error estimate.
pub fn fd_oracle_with_estimate(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
    m: usize,
    h0: f64,
) -> Result<(DenseOperator, f64)> {
    check_pair(a, k)?;
    if m == 0 || m > 4 {
        return Err(Error::Budget(format!(
            "finite-difference oracle supports orders 1..=4, got {m}"
        )));
    }
    let path = |t: f64| -> CMatrix {
        let at = DenseOperator::wrap(a.matrix() + k.matrix() * Complex64::new(t, 0.0));
        let d = decompose_hermitian(&at).expect("A + tK is Hermitian");
        d.apply_map(|z| phi_value(phi, z))
    };
    let (d, est) = richardson_derivative(&path, m, h0)?;
    Ok((DenseOperator::wrap(d), est))
}

fn phi_value(phi: &ScalarFunction, z: Complex64) -> Complex64 {
    use crate::scalar_functions::Smooth;
    phi.value(z)
}

/// Exact `d^m/dt^m (A + tK)^p` at 0: `m!` times the sum of all words of length
/// `p` in `{A, K}` with exactly `m` letters `K`.
pub fn monomial_oracle(
    p: usize,
    a: &DenseOperator,
    k: &DenseOperator,
    m: usize,
) -> Result<DenseOperator> {
    if p > MONOMIAL_ORACLE_MAX_DEGREE {
        return Err(Error::Budget(format!(
            "monomial oracle supports degree <= {MONOMIAL_ORACLE_MAX_DEGREE}, got {p}"
        )));
    }
    if m > p {
        return Err(Error::InvalidArgument(format!(
            "order {m} exceeds degree {p}"
        )));
    }
    if a.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            context: "A and K",
            expected: a.dim(),
            found: k.dim(),
        });
    }
    let n = a.dim();
    let mut acc = CMatrix::zeros(n, n);
    for mask in 0u32..(1 << p) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let mut w = CMatrix::identity(n, n);
        for pos in 0..p {
            w = if mask & (1 << pos) != 0 {
                w * k.matrix()
            } else {
                w * a.matrix()
            };
        }
        acc += w;
    }
    let fact: f64 = (1..=m).map(|x| x as f64).product();
    Ok(DenseOperator::wrap(acc * Complex64::new(fact, 0.0)))
}

/// Both sides of the identity
///
/// ```text
/// DOI(dg phi; E_{A+K}, K, E_{A+K}) - DOI(dg phi; E_{A+K}, K, E_A)
///     = MOI(dg^2 phi; E_{A+K}, K, E_{A+K}, K, E_A)
/// ```
pub fn perturbation_identity_sides(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
) -> Result<(DenseOperator, DenseOperator)> {
    check_pair(a, k)?;
    let da = decompose_hermitian(a)?;
    let db = decompose_hermitian(&sum(a, k)?)?;
    let (gb, ga) = (db.eigenvalues().to_vec(), da.eigenvalues().to_vec());
    let same = dd_tensor_mixed(phi, &[gb.clone(), gb.clone()]);
    let mixed = dd_tensor_mixed(phi, &[gb.clone(), ga.clone()]);
    let lhs = doi_eval(&same, &db, k, &db)?.operator.into_matrix()
        - doi_eval(&mixed, &db, k, &da)?.operator.into_matrix();
    let second = dd_tensor_mixed(phi, &[gb.clone(), gb, ga]);
    let rhs = moi_eval(&second, &[&db, &db, &da], &[k, k])?.operator;
    Ok((DenseOperator::wrap(lhs), rhs))
}

/// `||LHS - RHS||_op` of [`perturbation_identity_sides`].
pub fn perturbation_identity_residual(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
) -> Result<f64> {
    let (lhs, rhs) = perturbation_identity_sides(phi, a, k)?;
    Ok(operator_norm(&(lhs.matrix() - rhs.matrix())))
}

/// Oracles available to [`audit_selfadjoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfAdjointCheck {
    FiniteDifference,
    Monomial,
}

/// Runs the formula and the requested oracles. The monomial oracle applies
/// only to monomials `x^p` (after dropping zero coefficients).
pub fn audit_selfadjoint(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
    m: usize,
    checks: &[SelfAdjointCheck],
) -> Result<DerivativeReport> {
    let start = Instant::now();
    let formula = higher_derivative(phi, a, k, m)?;
    let mut report = DerivativeReport::new(m, formula, start.elapsed().as_micros());
    for check in checks {
        let start = Instant::now();
        match check {
            SelfAdjointCheck::FiniteDifference => {
                let v = fd_oracle(phi, a, k, m, default_step(m))?;
                report.add_oracle("fd", v, start.elapsed().as_micros());
            }
            SelfAdjointCheck::Monomial => {
                let v = polynomial_oracle(phi, a, k, m)?;
                report.add_oracle("monomial", v, start.elapsed().as_micros());
            }
        }
    }
    Ok(report)
}

/// Word-sum oracle extended linearly to polynomials of degree <= 8.
pub fn polynomial_oracle(
    phi: &ScalarFunction,
    a: &DenseOperator,
    k: &DenseOperator,
    m: usize,
) -> Result<DenseOperator> {
    let ScalarFunction::Polynomial(coeffs) = phi else {
        return Err(Error::InvalidArgument(
            "monomial oracle needs a polynomial".into(),
        ));
    };
    let n = a.dim();
    let mut acc = CMatrix::zeros(n, n);
    for (p, &c) in coeffs.iter().enumerate() {
        if c == 0.0 || p < m {
            continue;
        }
        acc += monomial_oracle(p, a, k, m)?.into_matrix() * Complex64::new(c, 0.0);
    }
    Ok(DenseOperator::wrap(acc))
}
