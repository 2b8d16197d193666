//! Spectral decompositions of Hermitian and unitary matrices and the
//! functional calculus built on them.
//!
//! Hermitian matrices are diagonalized by cyclic complex Jacobi rotations.
//! Unitary matrices are diagonalized through the commuting Hermitian pair
//! `(U + U*)/2` and `(U - U*)/(2i)`, which avoids any branch cut of a matrix
//! logarithm.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::scalar_functions::{Domain, Smooth};
use crate::{CMatrix, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Off-diagonal stopping threshold for Jacobi, relative to `||A||_F`.
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Hermitian eigenvalues closer than this (times `||U||`) form one cluster in
/// the unitary decomposition.
const UNITARY_CLUSTER_TOL: f64 = 1e-9;

/// A square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(CMatrix);

impl DenseOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "square operator",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "operator dimension must be at least 1".into(),
            ));
        }
        if m.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(
                "operator has non-finite entries".into(),
            ));
        }
        Ok(DenseOperator(m))
    }

    /// Row-major construction.
    pub fn from_row_major(n: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "row-major entries",
                expected: n * n,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<Complex64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_row_major(n, &flat)
    }

    pub fn identity(n: usize) -> Self {
        DenseOperator(CMatrix::identity(n, n))
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        DenseOperator(CMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(values),
        ))
    }

    pub(crate) fn wrap(m: CMatrix) -> Self {
        debug_assert!(m.is_square());
        DenseOperator(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator(self.0.adjoint())
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.0)
    }

    /// `||A - A*||_F`
    pub fn hermitian_defect(&self) -> f64 {
        frobenius(&(&self.0 - self.0.adjoint()))
    }

    /// `||U*U - I||_F`
    pub fn unitary_defect(&self) -> f64 {
        let n = self.dim();
        frobenius(&(self.0.adjoint() * &self.0 - CMatrix::identity(n, n)))
    }

    pub fn validate_hermitian(&self) -> Result<()> {
        let residual = self.hermitian_defect();
        let bound = 1e-10 * self.frobenius_norm().max(1.0);
        if residual > bound {
            return Err(Error::NotHermitian { residual, bound });
        }
        Ok(())
    }

    pub fn validate_unitary(&self) -> Result<()> {
        let residual = self.unitary_defect();
        let bound = 1e-10 * (self.dim() as f64).sqrt();
        if residual > bound {
            return Err(Error::NotUnitary { residual, bound });
        }
        Ok(())
    }
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value, from the top eigenvalue of `M* M`.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = m.adjoint() * m;
    let (vals, _) = jacobi_eigh(&g);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Which spectral theorem produced a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    Hermitian,
    Unitary,
}

impl SpectralKind {
    pub fn domain(self) -> Domain {
        match self {
            SpectralKind::Hermitian => Domain::Line,
            SpectralKind::Unitary => Domain::Circle,
        }
    }
}

/// Eigenvalues and an orthonormal eigenvector matrix (columns).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<Complex64>,
    eigenvectors: CMatrix,
    kind: SpectralKind,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from parts, e.g. to re-choose a basis inside
    /// degenerate eigenspaces. `eigenvectors` must have orthonormal columns.
    pub fn from_parts(
        eigenvalues: Vec<Complex64>,
        eigenvectors: CMatrix,
        kind: SpectralKind,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "eigenvector matrix",
                expected: n,
                found: eigenvectors.ncols(),
            });
        }
        let defect = frobenius(&(eigenvectors.adjoint() * &eigenvectors - CMatrix::identity(n, n)));
        if defect > 1e-10 * (n as f64).sqrt() {
            return Err(Error::InvalidArgument(format!(
                "eigenvectors not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            kind,
        })
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn kind(&self) -> SpectralKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(g(lambda)) V*` for an arbitrary scalar map.
    pub fn apply_map(&self, g: impl Fn(Complex64) -> Complex64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = g(lam);
            for i in 0..v.nrows() {
                scaled[(i, j)] *= s;
            }
        }
        scaled * v.adjoint()
    }

    /// `V diag(lambda) V*`
    pub fn reconstruct(&self) -> CMatrix {
        self.apply_map(|z| z)
    }
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
pub fn decompose_hermitian(a: &DenseOperator) -> Result<SpectralDecomposition> {
    a.validate_hermitian()?;
    let sym = (a.matrix() + a.matrix().adjoint()).scale(0.5);
    let (vals, vecs) = jacobi_eigh(&sym);
    Ok(SpectralDecomposition {
        eigenvalues: vals.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        eigenvectors: vecs,
        kind: SpectralKind::Hermitian,
    })
}

/// Eigendecomposition of a unitary operator, eigenvalues unimodular and sorted
/// by principal argument in `(-pi, pi]`.
pub fn decompose_unitary(u: &DenseOperator) -> Result<SpectralDecomposition> {
    u.validate_unitary()?;
    let m = u.matrix();
    let n = m.nrows();
    let h = (m + m.adjoint()).scale(0.5);
    let s = (m - m.adjoint()) * Complex64::new(0.0, -0.5);
    let (hvals, mut v) = jacobi_eigh(&h);

    let tol = UNITARY_CLUSTER_TOL * operator_norm(m).max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && hvals[end] - hvals[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            let block = v.columns(start, end - start).into_owned();
            let restricted = block.adjoint() * &s * &block;
            let restricted = (&restricted + restricted.adjoint()).scale(0.5);
            let (_, w) = jacobi_eigh(&restricted);
            let rotated = block * w;
            v.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }

    let mut pairs: Vec<(Complex64, usize)> = (0..n)
        .map(|j| {
            let col = v.column(j);
            let lam = (col.adjoint() * m * col)[(0, 0)];
            let lam = if lam.norm() > 0.0 {
                lam / lam.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            (lam, j)
        })
        .collect();
    pairs.sort_by(|a, b| {
        principal_arg(a.0)
            .total_cmp(&principal_arg(b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut vecs = CMatrix::zeros(n, n);
    for (k, &(_, j)) in pairs.iter().enumerate() {
        vecs.set_column(k, &v.column(j));
    }
    Ok(SpectralDecomposition {
        eigenvalues: pairs.into_iter().map(|p| p.0).collect(),
        eigenvectors: vecs,
        kind: SpectralKind::Unitary,
    })
}

/// Argument in `(-pi, pi]`.
fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// `f(D)` for a function whose domain matches the decomposition kind.
pub fn apply_function<F: Smooth + ?Sized>(
    d: &SpectralDecomposition,
    f: &F,
) -> Result<DenseOperator> {
    if f.domain() != d.kind.domain() {
        return Err(Error::Domain(format!(
            "{:?} function applied to a {:?} decomposition",
            f.domain(),
            d.kind
        )));
    }
    Ok(DenseOperator::wrap(d.apply_map(|z| f.value(z))))
}

/// `exp(itA) U`.
pub fn unitary_path(a: &DenseOperator, u: &DenseOperator, t: f64) -> Result<DenseOperator> {
    let da = decompose_hermitian(a)?;
    u.validate_unitary()?;
    if a.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            context: "unitary path",
            expected: a.dim(),
            found: u.dim(),
        });
    }
    Ok(DenseOperator::wrap(unitary_path_from(&da, u.matrix(), t)))
}

/// `exp(itA) U` given a decomposition of `A`.
pub(crate) fn unitary_path_from(da: &SpectralDecomposition, u: &CMatrix, t: f64) -> CMatrix {
    da.apply_map(|lam| (I * t * lam).exp()) * u
}

/// Cyclic Jacobi for a Hermitian matrix. Returns ascending real eigenvalues and
/// the matching unitary eigenvector matrix.
pub fn jacobi_eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = frobenius(&a);
    let target = JACOBI_TOL * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Phase D = diag(1, e^{-i alpha}) makes the pivot real, then a
                // real rotation annihilates it.
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let gpp = Complex64::new(c, 0.0);
                let gpq = Complex64::new(s, 0.0);
                let gqp = -s * phase.conj();
                let gqq = c * phase.conj();

                // A <- A G
                for i in 0..n {
                    let (aip, aiq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = aip * gpp + aiq * gqp;
                    a[(i, q)] = aip * gpq + aiq * gqq;
                }
                // A <- G* A
                for j in 0..n {
                    let (apj, aqj) = (a[(p, j)], a[(q, j)]);
                    a[(p, j)] = gpp.conj() * apj + gqp.conj() * aqj;
                    a[(q, j)] = gpq.conj() * apj + gqq.conj() * aqj;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                // V <- V G
                for i in 0..n {
                    let (vip, viq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = vip * gpp + viq * gqp;
                    v[(i, q)] = vip * gpq + viq * gqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &v.column(i));
    }
    (vals, vecs)
}
