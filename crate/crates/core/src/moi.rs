//! Double and multiple operator integrals for discrete spectral measures.
//!
//! For spectral decompositions `E_j` with eigenvector matrices `V_j`,
//!
//! ```text
//! int ... int psi(l_1, ..., l_k) dE_1(l_1) T_1 dE_2(l_2) ... T_{k-1} dE_k(l_k)
//!   = sum_{i_1..i_k} psi(l_{i_1}, ..., l_{i_k}) P_{i_1} T_1 P_{i_2} ... T_{k-1} P_{i_k}
//! ```
//!
//! Two evaluation paths are provided: the dense path contracts a kernel tensor
//! against the operators written in eigenbases, and the separable path sums
//! `f_1(A_1) T_1 f_2(A_2) ... T_{k-1} f_k(A_k)` over the terms of a finite
//! representation `psi = sum_x s_x f_1^x (x) ... (x) f_k^x`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::spectral::{DenseOperator, SpectralDecomposition};
use crate::{CMatrix, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Samples `psi(l_{i_1}, ..., l_{i_k})` on a product of eigenvalue grids.
/// Row-major: the last index varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTensor {
    grids: Vec<Vec<Complex64>>,
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl KernelTensor {
    pub(crate) fn from_parts(grids: Vec<Vec<Complex64>>, data: Vec<Complex64>) -> Self {
        let shape: Vec<usize> = grids.iter().map(Vec::len).collect();
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        KernelTensor { grids, shape, data }
    }

    /// Kernel tabulated from a closure on the grid values.
    pub fn from_fn(
        grids: Vec<Vec<Complex64>>,
        f: impl Fn(&[Complex64]) -> Complex64,
    ) -> Result<Self> {
        if grids.is_empty() || grids.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument(
                "kernel grids must be nonempty".into(),
            ));
        }
        let shape: Vec<usize> = grids.iter().map(Vec::len).collect();
        let total: usize = shape.iter().product();
        let mut point = vec![ZERO; shape.len()];
        let mut data = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            for s in (0..shape.len()).rev() {
                point[s] = grids[s][rem % shape[s]];
                rem /= shape[s];
            }
            data.push(f(&point));
        }
        let t = KernelTensor { grids, shape, data };
        t.check_finite()?;
        Ok(t)
    }

    /// The constant kernel.
    pub fn constant(grids: Vec<Vec<Complex64>>, value: Complex64) -> Result<Self> {
        Self::from_fn(grids, |_| value)
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(
                "kernel has non-finite entries".into(),
            ));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn grids(&self) -> &[Vec<Complex64>] {
        &self.grids
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.flat_index(idx)]
    }

    pub fn max_abs_diff(&self, other: &KernelTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// One elementary tensor `weight * f_1 (x) ... (x) f_k` with factor values on
/// the grids.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    weight: Complex64,
    factors: Vec<Vec<Complex64>>,
    sup_norms: Vec<f64>,
}

impl SeparableTerm {
    pub fn weight(&self) -> Complex64 {
        self.weight
    }

    pub fn factors(&self) -> &[Vec<Complex64>] {
        &self.factors
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }
}

/// Finite representation `psi = sum_x s_x f_1^x (x) ... (x) f_k^x` on fixed grids.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableRepresentation {
    grids: Vec<Vec<Complex64>>,
    terms: Vec<SeparableTerm>,
}

impl SeparableRepresentation {
    pub fn new(grids: Vec<Vec<Complex64>>) -> Result<Self> {
        if grids.len() < 2 || grids.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument(
                "separable representation needs order >= 2 and nonempty grids".into(),
            ));
        }
        Ok(SeparableRepresentation {
            grids,
            terms: Vec::new(),
        })
    }

    pub fn push_term(&mut self, weight: Complex64, factors: Vec<Vec<Complex64>>) -> Result<()> {
        if factors.len() != self.grids.len() {
            return Err(Error::DimensionMismatch {
                context: "separable term order",
                expected: self.grids.len(),
                found: factors.len(),
            });
        }
        for (f, g) in factors.iter().zip(&self.grids) {
            if f.len() != g.len() {
                return Err(Error::DimensionMismatch {
                    context: "separable factor length",
                    expected: g.len(),
                    found: f.len(),
                });
            }
        }
        if !weight.is_finite() || factors.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(
                "separable term has non-finite values".into(),
            ));
        }
        let sup_norms = factors
            .iter()
            .map(|f| f.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .collect();
        self.terms.push(SeparableTerm {
            weight,
            factors,
            sup_norms,
        });
        Ok(())
    }

    /// Adds a term whose factors are functions evaluated on the grids.
    pub fn push_fn_term(
        &mut self,
        weight: Complex64,
        factors: &[&dyn Fn(Complex64) -> Complex64],
    ) -> Result<()> {
        if factors.len() != self.grids.len() {
            return Err(Error::DimensionMismatch {
                context: "separable term order",
                expected: self.grids.len(),
                found: factors.len(),
            });
        }
        let values = factors
            .iter()
            .zip(&self.grids)
            .map(|(f, g)| g.iter().map(|&z| f(z)).collect())
            .collect();
        self.push_term(weight, values)
    }

    pub fn order(&self) -> usize {
        self.grids.len()
    }

    pub fn grids(&self) -> &[Vec<Complex64>] {
        &self.grids
    }

    pub fn terms(&self) -> &[SeparableTerm] {
        &self.terms
    }

    /// `sum_x s_x prod_j f_j^x(l_{i_j})` on the grids.
    pub fn induced_kernel(&self) -> KernelTensor {
        let shape: Vec<usize> = self.grids.iter().map(Vec::len).collect();
        let total: usize = shape.iter().product();
        let mut data = vec![ZERO; total];
        let mut idx = vec![0usize; shape.len()];
        for term in &self.terms {
            for (flat, slot) in data.iter_mut().enumerate() {
                let mut rem = flat;
                for s in (0..shape.len()).rev() {
                    idx[s] = rem % shape[s];
                    rem /= shape[s];
                }
                let prod = idx
                    .iter()
                    .enumerate()
                    .fold(term.weight, |acc, (s, &i)| acc * term.factors[s][i]);
                *slot += prod;
            }
        }
        KernelTensor::from_parts(self.grids.clone(), data)
    }
}

/// `sum_x |s_x| prod_j ||f_j^x||_inf`: the value of this representation, an
/// upper bound for the projective tensor norm of the induced kernel.
pub fn projective_norm(rep: &SeparableRepresentation) -> f64 {
    rep.terms
        .iter()
        .map(|t| t.weight.norm() * t.sup_norms.iter().product::<f64>())
        .sum()
}

/// Which route produced an operator integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationPath {
    Dense,
    Separable,
}

#[derive(Debug, Clone)]
pub struct MoiResult {
    pub operator: DenseOperator,
    pub path: EvaluationPath,
    pub projective_bound: Option<f64>,
}

fn check_shapes(
    shape: &[usize],
    decomps: &[&SpectralDecomposition],
    ts: &[&DenseOperator],
) -> Result<usize> {
    if decomps.len() != shape.len() {
        return Err(Error::DimensionMismatch {
            context: "number of spectral measures",
            expected: shape.len(),
            found: decomps.len(),
        });
    }
    if ts.len() + 1 != decomps.len() {
        return Err(Error::DimensionMismatch {
            context: "number of operators",
            expected: decomps.len() - 1,
            found: ts.len(),
        });
    }
    let n = decomps[0].dim();
    for (d, &len) in decomps.iter().zip(shape) {
        if d.dim() != len {
            return Err(Error::DimensionMismatch {
                context: "kernel grid length",
                expected: d.dim(),
                found: len,
            });
        }
        if d.dim() != n {
            return Err(Error::DimensionMismatch {
                context: "spectral measure dimension",
                expected: n,
                found: d.dim(),
            });
        }
    }
    for t in ts {
        if t.dim() != n {
            return Err(Error::DimensionMismatch {
                context: "operator dimension",
                expected: n,
                found: t.dim(),
            });
        }
    }
    Ok(n)
}

/// Double operator integral `V_L (psi o (V_L* T V_R)) V_R*`.
pub fn doi_eval(
    psi: &KernelTensor,
    left: &SpectralDecomposition,
    t: &DenseOperator,
    right: &SpectralDecomposition,
) -> Result<MoiResult> {
    if psi.order() != 2 {
        return Err(Error::InvalidArgument(format!(
            "double operator integral needs an order-2 kernel, got {}",
            psi.order()
        )));
    }
    check_shapes(psi.shape(), &[left, right], &[t])?;
    let vl = left.eigenvectors();
    let vr = right.eigenvectors();
    let mut inner = vl.adjoint() * t.matrix() * vr;
    let cols = inner.ncols();
    for i in 0..inner.nrows() {
        for j in 0..cols {
            inner[(i, j)] *= psi.data()[i * cols + j];
        }
    }
    Ok(MoiResult {
        operator: DenseOperator::wrap(vl * inner * vr.adjoint()),
        path: EvaluationPath::Dense,
        projective_bound: None,
    })
}

/// Multiple operator integral by nested contraction in the eigenbases.
///
/// Each `T_j` is moved into eigen-coordinates, `T~_j = V_j* T_j V_{j+1}`; then
/// for every first index the kernel slice is folded left to right against the
/// `T~_j`. Cost is `O(k n^{k+1})`; no projection products are formed.
pub fn moi_eval(
    psi: &KernelTensor,
    decomps: &[&SpectralDecomposition],
    ts: &[&DenseOperator],
) -> Result<MoiResult> {
    if psi.order() < 2 {
        return Err(Error::InvalidArgument(
            "operator integral kernel must have order >= 2".into(),
        ));
    }
    let n = check_shapes(psi.shape(), decomps, ts)?;
    let k = psi.order();
    let tt: Vec<CMatrix> = ts
        .iter()
        .enumerate()
        .map(|(j, t)| {
            decomps[j].eigenvectors().adjoint() * t.matrix() * decomps[j + 1].eigenvectors()
        })
        .collect();

    let slice_len = n.pow((k - 1) as u32);
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let slice = &psi.data()[i1 * slice_len..(i1 + 1) * slice_len];
            // m has indices (i_j, i_{j+1}, ..., i_k), flattened row-major.
            let mut m: Vec<Complex64> = slice
                .iter()
                .enumerate()
                .map(|(flat, &v)| v * tt[0][(i1, flat / n.pow((k - 2) as u32))])
                .collect();
            for tj in tt.iter().skip(1) {
                let rest = m.len() / (n * n);
                // next[i_{j+1}, tail] = sum_{i_j} T~[i_j, i_{j+1}] m[i_j, i_{j+1}, tail]
                let mut next = vec![ZERO; n * rest];
                for a in 0..n {
                    for b in 0..n {
                        let w = tj[(a, b)];
                        let src = &m[(a * n + b) * rest..(a * n + b + 1) * rest];
                        let dst = &mut next[b * rest..(b + 1) * rest];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
                m = next;
            }
            m
        })
        .collect();

    let mut inner = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            inner[(i, j)] = v;
        }
    }
    let out = decomps[0].eigenvectors() * inner * decomps[k - 1].eigenvectors().adjoint();
    Ok(MoiResult {
        operator: DenseOperator::wrap(out),
        path: EvaluationPath::Dense,
        projective_bound: None,
    })
}

/// Operator integral of a separable representation,
/// `sum_x s_x f_1^x(A_1) T_1 f_2^x(A_2) ... T_{k-1} f_k^x(A_k)`.
pub fn moi_separable_eval(
    rep: &SeparableRepresentation,
    decomps: &[&SpectralDecomposition],
    ts: &[&DenseOperator],
) -> Result<MoiResult> {
    let shape: Vec<usize> = rep.grids().iter().map(Vec::len).collect();
    let n = check_shapes(&shape, decomps, ts)?;
    let mut acc = CMatrix::zeros(n, n);
    for term in rep.terms() {
        let mut prod = factor_operator(decomps[0], &term.factors[0]);
        for (j, t) in ts.iter().enumerate() {
            prod = prod * t.matrix() * factor_operator(decomps[j + 1], &term.factors[j + 1]);
        }
        acc += prod * term.weight;
    }
    Ok(MoiResult {
        operator: DenseOperator::wrap(acc),
        path: EvaluationPath::Separable,
        projective_bound: Some(projective_norm(rep)),
    })
}

/// `V diag(values) V*`
fn factor_operator(d: &SpectralDecomposition, values: &[Complex64]) -> CMatrix {
    let v = d.eigenvectors();
    let mut scaled = v.clone();
    for (j, &s) in values.iter().enumerate() {
        for i in 0..v.nrows() {
            scaled[(i, j)] *= s;
        }
    }
    scaled * v.adjoint()
}
