//! Closed-form functions on the real line and on the unit circle, together with
//! divided differences of arbitrary order.
//!
//! Divided differences are evaluated on a Newton table. Nodes that lie closer
//! than a cluster tolerance are merged into clusters; every table entry whose
//! nodes all belong to one cluster is computed from the Taylor expansion of the
//! function at the cluster centre, using
//!
//! ```text
//! dg^q (x - c)^l = h_{l-q}(x_1 - c, ..., x_{q+1} - c)
//! ```
//!
//! where `h_r` is the complete homogeneous symmetric polynomial. All other
//! entries follow the usual recursion. Exact derivatives are always available
//! for the builtin function kinds, so coincident nodes never produce `0/0`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::moi::KernelTensor;
use crate::{Error, Result};

/// Unimodularity tolerance for circle points.
pub const UNIMODULAR_TOL: f64 = 1e-12;

/// Default relative cluster tolerance for divided differences.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

/// Extra Taylor terms used inside a cluster beyond the divided-difference order.
const TAYLOR_EXTRA_TERMS: usize = 8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Where a function lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Line,
    Circle,
}

/// A function with exact complex derivatives of every order.
///
/// `derivative(j, z)` is the `j`-th derivative with respect to the complex
/// variable `z` (for circle functions this is `d/dz`, not `d/dtheta`).
pub trait Smooth: Sync {
    fn domain(&self) -> Domain;

    fn derivative(&self, order: usize, z: Complex64) -> Complex64;

    fn value(&self, z: Complex64) -> Complex64 {
        self.derivative(0, z)
    }
}

/// Real-line functions with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFunction {
    /// `sum_i c_i x^i`, coefficients in ascending degree.
    Polynomial(Vec<f64>),
    /// `exp(rate * x)`
    Exp(f64),
    /// `sin(rate * x)`
    Sin(f64),
    /// `cos(rate * x)`
    Cos(f64),
}

impl ScalarFunction {
    /// The monomial `x^p`.
    pub fn monomial(p: usize) -> Self {
        let mut c = vec![0.0; p + 1];
        c[p] = 1.0;
        ScalarFunction::Polynomial(c)
    }

    /// Degree for polynomials, `None` for transcendental kinds.
    pub fn degree(&self) -> Option<usize> {
        match self {
            ScalarFunction::Polynomial(c) => Some(c.iter().rposition(|&x| x != 0.0).unwrap_or(0)),
            _ => None,
        }
    }

    /// Exact `order`-th derivative at a real point.
    pub fn eval_derivative(&self, order: usize, x: f64) -> Complex64 {
        self.derivative(order, Complex64::new(x, 0.0))
    }
}

impl Smooth for ScalarFunction {
    fn domain(&self) -> Domain {
        Domain::Line
    }

    fn derivative(&self, order: usize, z: Complex64) -> Complex64 {
        match self {
            ScalarFunction::Polynomial(c) => {
                if order >= c.len() {
                    return Complex64::new(0.0, 0.0);
                }
                // Horner on the differentiated coefficients.
                let mut acc = Complex64::new(0.0, 0.0);
                for i in (order..c.len()).rev() {
                    acc = acc * z + c[i] * falling_factorial(i, order);
                }
                acc
            }
            ScalarFunction::Exp(r) => r.powi(order as i32) * (*r * z).exp(),
            ScalarFunction::Sin(r) => r.powi(order as i32) * quarter_turn_sin(order, *r * z),
            ScalarFunction::Cos(r) => r.powi(order as i32) * quarter_turn_sin(order + 1, *r * z),
        }
    }
}

/// `sin(w + j*pi/2)` without adding a rounded multiple of pi/2.
fn quarter_turn_sin(j: usize, w: Complex64) -> Complex64 {
    match j % 4 {
        0 => w.sin(),
        1 => w.cos(),
        2 => -w.sin(),
        _ => -w.cos(),
    }
}

/// `i (i-1) ... (i-j+1)` as a float.
fn falling_factorial(i: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, t| acc * (i - t) as f64)
}

/// Trigonometric polynomial `sum_n c_n z^n` on the unit circle.
///
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircleFunction {
    coefficients: BTreeMap<i64, Complex64>,
}

impl CircleFunction {
    pub fn new<I>(coefficients: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (n, c) in coefficients {
            *map.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        CircleFunction { coefficients: map }
    }

    /// `z^n`.
    pub fn monomial(n: i64) -> Self {
        Self::new([(n, Complex64::new(1.0, 0.0))])
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new([(0, c)])
    }

    pub fn coefficients(&self) -> &BTreeMap<i64, Complex64> {
        &self.coefficients
    }

    pub fn coefficient(&self, n: i64) -> Complex64 {
        self.coefficients.get(&n).copied().unwrap_or_default()
    }

    /// Degree bound `N = max |n|` over stored coefficients.
    pub fn degree(&self) -> usize {
        self.coefficients
            .keys()
            .map(|n| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// True when `c_{-n} = conj(c_n)` for all `n` within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.coefficients
            .iter()
            .all(|(&n, &c)| (self.coefficient(-n) - c.conj()).norm() <= tol)
    }

    /// Evaluation at a unimodular point.
    pub fn eval(&self, zeta: Complex64) -> Result<Complex64> {
        check_unimodular(zeta)?;
        Ok(self.value(zeta))
    }

    /// `order`-th derivative with respect to the arclength parameter theta,
    /// `zeta = exp(i theta)`: `sum_n (i n)^order c_n zeta^n`.
    pub fn eval_derivative(&self, order: usize, zeta: Complex64) -> Result<Complex64> {
        check_unimodular(zeta)?;
        Ok(self
            .coefficients
            .iter()
            .map(|(&n, &c)| c * (I * n as f64).powu(order as u32) * zeta.powi(n as i32))
            .sum())
    }

    /// Backward shift `P_+ zbar^k f`: output coefficient `n` is `c_{n+k}` for
    /// `n >= 0`, negative indices are dropped.
    pub fn backward_shift(&self, k: u32) -> CircleFunction {
        let k = k as i64;
        CircleFunction::new(
            self.coefficients
                .iter()
                .filter(|(&n, _)| n - k >= 0)
                .map(|(&n, &c)| (n - k, c)),
        )
    }

    /// Coefficients with nonnegative index only.
    pub fn analytic_part(&self) -> CircleFunction {
        CircleFunction::new(self.coefficients.range(0..).map(|(&n, &c)| (n, c)))
    }

    /// Coefficientwise multiplication `c_n * m(n)` (a Fourier multiplier).
    pub fn map_coefficients(
        &self,
        mut m: impl FnMut(i64, Complex64) -> Complex64,
    ) -> CircleFunction {
        CircleFunction::new(self.coefficients.iter().map(|(&n, &c)| (n, m(n, c))))
    }

    /// Convolution with `g`: coefficients multiply.
    pub fn convolve(&self, g: &CircleFunction) -> CircleFunction {
        self.map_coefficients(|n, c| c * g.coefficient(n))
    }

    pub fn add(&self, g: &CircleFunction) -> CircleFunction {
        CircleFunction::new(
            self.coefficients
                .iter()
                .chain(g.coefficients.iter())
                .map(|(&n, &c)| (n, c)),
        )
    }

    /// Largest coefficientwise difference.
    pub fn max_coefficient_diff(&self, g: &CircleFunction) -> f64 {
        self.coefficients
            .keys()
            .chain(g.coefficients.keys())
            .map(|&n| (self.coefficient(n) - g.coefficient(n)).norm())
            .fold(0.0, f64::max)
    }
}

impl Smooth for CircleFunction {
    fn domain(&self) -> Domain {
        Domain::Circle
    }

    fn derivative(&self, order: usize, z: Complex64) -> Complex64 {
        self.coefficients
            .iter()
            .map(|(&n, &c)| {
                let factor = (0..order).fold(1.0, |acc, t| acc * (n - t as i64) as f64);
                if factor == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * factor * z.powi((n - order as i64) as i32)
                }
            })
            .sum()
    }
}

/// Either kind of builtin function.
#[derive(Debug, Clone, PartialEq)]
pub enum Function {
    Line(ScalarFunction),
    Circle(CircleFunction),
}

impl Smooth for Function {
    fn domain(&self) -> Domain {
        match self {
            Function::Line(_) => Domain::Line,
            Function::Circle(_) => Domain::Circle,
        }
    }

    fn derivative(&self, order: usize, z: Complex64) -> Complex64 {
        match self {
            Function::Line(f) => f.derivative(order, z),
            Function::Circle(f) => f.derivative(order, z),
        }
    }
}

/// `order`-th derivative of a builtin function at a point of its domain: real
/// points for line functions (derivative in `x`), unimodular points for circle
/// functions (derivative in the arclength parameter).
pub fn eval_derivative(f: &Function, order: usize, x: Complex64) -> Result<Complex64> {
    match f {
        Function::Line(g) => {
            check_real(x)?;
            Ok(g.eval_derivative(order, x.re))
        }
        Function::Circle(g) => g.eval_derivative(order, x),
    }
}

fn check_unimodular(z: Complex64) -> Result<()> {
    if (z.norm() - 1.0).abs() > UNIMODULAR_TOL || !z.is_finite() {
        return Err(Error::Domain(format!(
            "|{z}| differs from 1 by more than {UNIMODULAR_TOL:e}"
        )));
    }
    Ok(())
}

fn check_real(z: Complex64) -> Result<()> {
    if z.im.abs() > UNIMODULAR_TOL * z.re.abs().max(1.0) || !z.is_finite() {
        return Err(Error::Domain(format!("{z} is not a real point")));
    }
    Ok(())
}

/// Nodes and options for one divided difference.
#[derive(Debug, Clone)]
pub struct DividedDifferenceRequest<'a, F: Smooth + ?Sized> {
    pub function: &'a F,
    pub nodes: Vec<Complex64>,
    /// Relative cluster tolerance; the absolute threshold is
    /// `tolerance * max(spread, 1)`.
    pub tolerance: f64,
}

impl<'a, F: Smooth + ?Sized> DividedDifferenceRequest<'a, F> {
    pub fn new(function: &'a F, nodes: Vec<Complex64>) -> Self {
        DividedDifferenceRequest {
            function,
            nodes,
            tolerance: DEFAULT_CLUSTER_TOL,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn evaluate(&self) -> Result<Complex64> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidArgument(
                "divided difference needs at least one node".into(),
            ));
        }
        for &z in &self.nodes {
            match self.function.domain() {
                Domain::Circle => check_unimodular(z)?,
                Domain::Line => check_real(z)?,
            }
        }
        Ok(divided_difference_unchecked(
            self.function,
            &self.nodes,
            self.tolerance,
        ))
    }
}

/// `(dg^k f)(nodes)` with `k = nodes.len() - 1` and the default tolerance.
pub fn divided_difference<F: Smooth + ?Sized>(f: &F, nodes: &[Complex64]) -> Result<Complex64> {
    DividedDifferenceRequest::new(f, nodes.to_vec()).evaluate()
}

/// Real-node convenience wrapper.
pub fn divided_difference_real<F: Smooth + ?Sized>(f: &F, nodes: &[f64]) -> Result<Complex64> {
    let z: Vec<Complex64> = nodes.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    divided_difference(f, &z)
}

/// Divided difference without domain validation. Callers guarantee the nodes
/// lie in the function's domain (e.g. eigenvalues of a validated operator).
pub(crate) fn divided_difference_unchecked<F: Smooth + ?Sized>(
    f: &F,
    nodes: &[Complex64],
    tolerance: f64,
) -> Complex64 {
    let k1 = nodes.len();
    if k1 == 1 {
        return f.value(nodes[0]);
    }
    let (ordered, cluster) = cluster_nodes(nodes, tolerance);

    // Cluster centres.
    let n_clusters = cluster.last().map_or(0, |c| c + 1);
    let mut centres = vec![Complex64::new(0.0, 0.0); n_clusters];
    let mut counts = vec![0usize; n_clusters];
    for (z, &c) in ordered.iter().zip(&cluster) {
        centres[c] += z;
        counts[c] += 1;
    }
    for (c, &m) in centres.iter_mut().zip(&counts) {
        *c /= m as f64;
    }

    // Taylor coefficients at each centre, up to the order needed inside it.
    let taylor: Vec<Vec<Complex64>> = centres
        .iter()
        .zip(&counts)
        .map(|(&c, &m)| {
            if m == 1 {
                Vec::new()
            } else {
                let mut fact = 1.0;
                (0..m + TAYLOR_EXTRA_TERMS)
                    .map(|l| {
                        if l > 0 {
                            fact *= l as f64;
                        }
                        f.derivative(l, c) / fact
                    })
                    .collect()
            }
        })
        .collect();

    // Newton table, one diagonal at a time: row[i] holds dg over ordered[i..=i+len].
    let mut row: Vec<Complex64> = ordered.iter().map(|&z| f.value(z)).collect();
    for len in 1..k1 {
        let next: Vec<Complex64> = (0..k1 - len)
            .map(|i| {
                let j = i + len;
                if cluster[i] == cluster[j] {
                    let c = cluster[i];
                    confluent_segment(&taylor[c], centres[c], &ordered[i..=j])
                } else {
                    (row[i] - row[i + 1]) / (ordered[i] - ordered[j])
                }
            })
            .collect();
        row = next;
    }
    row[0]
}

/// `dg^q` of the Taylor polynomial `sum_l a_l (x - c)^l` over `seg`
/// (`q = seg.len() - 1`), exact for polynomials of degree below `a.len()`.
fn confluent_segment(a: &[Complex64], c: Complex64, seg: &[Complex64]) -> Complex64 {
    let q = seg.len() - 1;
    let extra = a.len() - q;
    // h[r] = complete homogeneous symmetric polynomial of degree r in (seg - c).
    let mut h = vec![Complex64::new(0.0, 0.0); extra];
    h[0] = Complex64::new(1.0, 0.0);
    for &z in seg {
        let y = z - c;
        for r in 1..extra {
            let prev = h[r - 1];
            h[r] += y * prev;
        }
    }
    (0..extra).map(|r| a[q + r] * h[r]).sum()
}

/// Sorts nodes by (re, im, original index), merges nodes within the absolute
/// threshold by single linkage, and reorders so each cluster is contiguous.
/// Returns the reordered nodes and their cluster ids (nondecreasing).
fn cluster_nodes(nodes: &[Complex64], tolerance: f64) -> (Vec<Complex64>, Vec<usize>) {
    let k1 = nodes.len();
    let mut spread: f64 = 0.0;
    for i in 0..k1 {
        for j in i + 1..k1 {
            spread = spread.max((nodes[i] - nodes[j]).norm());
        }
    }
    let threshold = tolerance * spread.max(1.0);

    let mut idx: Vec<usize> = (0..k1).collect();
    idx.sort_by(|&a, &b| {
        nodes[a]
            .re
            .total_cmp(&nodes[b].re)
            .then(nodes[a].im.total_cmp(&nodes[b].im))
            .then(a.cmp(&b))
    });

    // Union-find over sorted positions.
    let mut parent: Vec<usize> = (0..k1).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..k1 {
        for b in a + 1..k1 {
            if (nodes[idx[a]] - nodes[idx[b]]).norm() < threshold {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    // Clusters ordered by their first sorted member.
    let mut label = vec![usize::MAX; k1];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for a in 0..k1 {
        let r = find(&mut parent, a);
        if label[r] == usize::MAX {
            label[r] = members.len();
            members.push(Vec::new());
        }
        members[label[r]].push(a);
    }
    let mut ordered = Vec::with_capacity(k1);
    let mut cluster = Vec::with_capacity(k1);
    for (c, m) in members.iter().enumerate() {
        for &a in m {
            ordered.push(nodes[idx[a]]);
            cluster.push(c);
        }
    }
    (ordered, cluster)
}

/// Tabulates `dg^m f` on one grid used in all `m + 1` slots.
pub fn dd_tensor<F: Smooth + ?Sized>(f: &F, grid: &[Complex64], order: usize) -> KernelTensor {
    let grids = vec![grid.to_vec(); order + 1];
    dd_tensor_mixed(f, &grids)
}

/// Tabulates `dg^m f` with a separate grid per slot (`m + 1 = grids.len()`),
/// e.g. eigenvalues of `A + K` in one slot and of `A` in another.
pub fn dd_tensor_mixed<F: Smooth + ?Sized>(f: &F, grids: &[Vec<Complex64>]) -> KernelTensor {
    let shape: Vec<usize> = grids.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let data: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut nodes = vec![Complex64::new(0.0, 0.0); shape.len()];
            for s in (0..shape.len()).rev() {
                nodes[s] = grids[s][rem % shape[s]];
                rem /= shape[s];
            }
            divided_difference_unchecked(f, &nodes, DEFAULT_CLUSTER_TOL)
        })
        .collect();
    KernelTensor::from_parts(grids.to_vec(), data)
}
