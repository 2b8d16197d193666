//! Littlewood-Paley analysis on the circle, the `R_n` / `Q_m` kernels, the
//! monomial separable representation of `dg^2 phi`, and band-limited
//! functions on the line given by samples of their Fourier transform.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::moi::SeparableRepresentation;
use crate::scalar_functions::{divided_difference_real, CircleFunction, Domain, Smooth};
use crate::{Error, Result};

/// Sharpness used when none is given.
pub const DEFAULT_SHARPNESS: f64 = 1.0;

/// Minimum number of points for sup norms by FFT sampling.
pub const MIN_SUP_SAMPLES: usize = 1 << 14;

/// Number of points of the uniform `tau` grid in the difference seminorm.
pub const TAU_GRID: usize = 1 << 12;

/// `R_n` keeps coefficients with `|k| <= R_TRUNCATION * n`.
pub const R_TRUNCATION: usize = 64;

/// Minimum FFT size for `||R_n||_1`.
pub const R_MIN_SAMPLES: usize = 1 << 16;

/// Regression bound: `max_k ||R_{2^k}||_1 <= (1 + eps) ||R_{2^10}||_1`.
pub const R_PLATEAU_EPS: f64 = 0.1;

/// Frozen bracket for `projective_norm(dg^2 phi) / besov_seminorm_lp(phi, 2)`
/// over random trigonometric polynomials of degree 2..=16 with the default
/// window. Measured range over 1000 such polynomials: [0.0999, 0.692].
pub const OTS_RATIO_BRACKET: (f64, f64) = (0.05, 1.0);

/// Frozen constant `C` with `diff / lp` in `[1/C, C]` on `z^(2^j)`, `j <= 6`,
/// `d` in `{1, 2}`, default window. Measured ratios lie in [1.72, 2.0].
pub const SEMINORM_BRACKET_C: f64 = 2.5;

/// Smallest number of profile samples accepted by [`FourierProfile`].
pub const MIN_PROFILE_SAMPLES: usize = 512;

/// Gauss-Legendre order per simplex direction.
pub const SIMPLEX_GL_ORDER: usize = 48;

/// Dyadic window `w` with `supp w = [1/2, 2]` and `sum_n w(2^n x) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    sharpness: f64,
    n_min: i32,
    n_max: i32,
}

pub fn make_window(sharpness: f64) -> Result<Window> {
    if !(sharpness > 0.0 && sharpness.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "window sharpness must be positive, got {sharpness}"
        )));
    }
    Ok(Window {
        sharpness,
        n_min: -64,
        n_max: 64,
    })
}

impl Default for Window {
    fn default() -> Self {
        make_window(DEFAULT_SHARPNESS).expect("default sharpness is positive")
    }
}

impl Window {
    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    /// Dyadic indices summed by [`Window::partition_sum`].
    pub fn dyadic_range(&self) -> (i32, i32) {
        (self.n_min, self.n_max)
    }

    fn chi(&self, s: f64) -> f64 {
        if s > 0.0 {
            (-self.sharpness / s).exp()
        } else {
            0.0
        }
    }

    /// Smooth step: 0 for `s <= 0`, 1 for `s >= 1`.
    pub fn step(&self, s: f64) -> f64 {
        let a = self.chi(s);
        a / (a + self.chi(1.0 - s))
    }

    pub fn w(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x.log2();
        if s <= -1.0 || s >= 1.0 {
            return 0.0;
        }
        self.step(s + 1.0) - self.step(s)
    }

    pub fn partition_sum(&self, x: f64) -> f64 {
        (self.n_min..=self.n_max)
            .map(|n| self.w(2f64.powi(n) * x))
            .sum()
    }
}

fn sample_count(degree: usize, floor: usize) -> usize {
    floor.max((8 * degree.max(1)).next_power_of_two())
}

/// Values of `f` at the `n` roots of unity `exp(2 pi i l / n)`.
fn sample_on_circle(planner: &mut FftPlanner<f64>, f: &CircleFunction, n: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (&k, &c) in f.coefficients() {
        buf[k.rem_euclid(n as i64) as usize] += c;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

fn sup_with(planner: &mut FftPlanner<f64>, f: &CircleFunction) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let n = sample_count(f.degree(), MIN_SUP_SAMPLES);
    sample_on_circle(planner, f, n)
        .iter()
        .fold(0.0, |m, v| m.max(v.norm()))
}

/// Sup norm on the circle by sampling at `max(2^14, 8 deg)` points.
pub fn sup_norm(f: &CircleFunction) -> f64 {
    sup_with(&mut FftPlanner::new(), f)
}

/// Pieces `phi * W_n` (`n >= 0`) and `phi * W_n^#` (`n >= 1`).
#[derive(Debug, Clone)]
pub struct LPDecomposition {
    pieces: Vec<CircleFunction>,
    sharp_pieces: Vec<CircleFunction>,
    sup_norms: Vec<f64>,
    sharp_sup_norms: Vec<f64>,
}

impl LPDecomposition {
    /// Pieces `phi * W_n`, index `n`.
    pub fn pieces(&self) -> &[CircleFunction] {
        &self.pieces
    }

    /// Pieces `phi * W_n^#`, index `n - 1`.
    pub fn sharp_pieces(&self) -> &[CircleFunction] {
        &self.sharp_pieces
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }

    pub fn sharp_sup_norms(&self) -> &[f64] {
        &self.sharp_sup_norms
    }

    pub fn reconstruct(&self) -> CircleFunction {
        self.pieces
            .iter()
            .chain(&self.sharp_pieces)
            .fold(CircleFunction::default(), |acc, p| acc.add(p))
    }
}

pub fn lp_decompose(phi: &CircleFunction, win: &Window) -> LPDecomposition {
    let mut planner = FftPlanner::new();
    let degree = phi.degree() as u64;
    let w0 = phi.map_coefficients(|k, c| {
        if k.abs() <= 1 {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut pieces = vec![w0];
    let mut sharp_pieces = Vec::new();
    let mut n = 1u32;
    while (1u64 << (n - 1)) < degree {
        let scale = 2f64.powi(n as i32);
        pieces.push(phi.map_coefficients(|k, c| {
            if k > 0 {
                c * win.w(k as f64 / scale)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }));
        sharp_pieces.push(phi.map_coefficients(|k, c| {
            if k < 0 {
                c * win.w(-k as f64 / scale)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }));
        n += 1;
    }
    let sup_norms = pieces.iter().map(|p| sup_with(&mut planner, p)).collect();
    let sharp_sup_norms = sharp_pieces
        .iter()
        .map(|p| sup_with(&mut planner, p))
        .collect();
    LPDecomposition {
        pieces,
        sharp_pieces,
        sup_norms,
        sharp_sup_norms,
    }
}

/// `sum_{n>=0} 2^{nd} ||phi * W_n|| + sum_{n>=1} 2^{nd} ||phi * W_n^#||`.
pub fn besov_seminorm_lp(phi: &CircleFunction, d: u32, win: &Window) -> f64 {
    let lp = lp_decompose(phi, win);
    let weight = |n: usize| 2f64.powi((n as i32) * d as i32);
    let main: f64 = lp
        .sup_norms
        .iter()
        .enumerate()
        .map(|(n, s)| weight(n) * s)
        .sum();
    let sharp: f64 = lp
        .sharp_sup_norms
        .iter()
        .enumerate()
        .map(|(i, s)| weight(i + 1) * s)
        .sum();
    main + sharp
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `||phi^{(d)}|| + int ||Delta_tau^{d+1} phi|| / |1 - tau|^{1+d} dm(tau)`,
/// with `phi^{(d)}` the derivative in the angle and the integral a trapezoid
/// sum over a uniform grid of `2^12` points minus `tau = 1` and its two
/// neighbours.
pub fn besov_seminorm_diff(phi: &CircleFunction, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "difference seminorm needs d >= 1".into(),
        ));
    }
    let mut planner = FftPlanner::new();
    let deriv = phi.map_coefficients(|k, c| c * Complex64::new(0.0, k as f64).powu(d));
    let head = sup_with(&mut planner, &deriv);
    if phi.is_zero() {
        return Ok(head);
    }
    let n = sample_count(phi.degree(), MIN_SUP_SAMPLES.max(TAU_GRID));
    let vals = sample_on_circle(&mut planner, phi, n);
    let stride = n / TAU_GRID;
    let mask = n - 1;
    let order = d as u64 + 1;
    let weights: Vec<f64> = (0..=order)
        .map(|j| binomial(order, j) * if (order - j) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let integrand: Vec<f64> = (2..TAU_GRID - 1)
        .into_par_iter()
        .map(|k| {
            let shift = k * stride;
            let mut sup = 0.0f64;
            for l in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &wj) in weights.iter().enumerate() {
                    acc += vals[(l + j * shift) & mask] * wj;
                }
                sup = sup.max(acc.norm());
            }
            let tau =
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / TAU_GRID as f64);
            sup / (Complex64::new(1.0, 0.0) - tau).norm().powi(1 + d as i32)
        })
        .collect();
    let tail: f64 = integrand.iter().sum::<f64>() / TAU_GRID as f64;
    Ok(head + tail)
}

/// `r(x) = 1` for `|x| <= 1`, `1/x` otherwise.
pub fn r_profile(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        1.0
    } else {
        1.0 / x
    }
}

/// Truncated `R_n` with its sampled `L^1` norm.
#[derive(Debug, Clone)]
pub struct RKernel {
    pub n: usize,
    pub truncation: usize,
    pub kernel: CircleFunction,
    pub l1_norm: f64,
    /// Bound on the `L^1` norm of the discarded coefficients `|k| > truncation`.
    pub tail_bound: f64,
    pub samples: usize,
}

pub fn kernel_r(n: usize) -> Result<RKernel> {
    if n == 0 {
        return Err(Error::InvalidArgument("R_n needs n >= 1".into()));
    }
    let big_k = R_TRUNCATION * n;
    let kernel = CircleFunction::new(
        (-(big_k as i64)..=big_k as i64)
            .map(|k| (k, Complex64::new(r_profile(k as f64 / n as f64), 0.0))),
    );
    let samples = R_MIN_SAMPLES.max(2 * (2 * big_k + 1).next_power_of_two());
    let vals = sample_on_circle(&mut FftPlanner::new(), &kernel, samples);
    let l1_norm = vals.iter().map(|v| v.norm()).sum::<f64>() / samples as f64;
    // The tail is 2in sum_{k>K} sin(k theta)/k. Abel summation bounds it by
    // pi / ((K+1) theta) on (0, pi], and it never exceeds pi/2 + Si(pi) < 3.5.
    let kp1 = (big_k + 1) as f64;
    let tail_bound = 2.0 * n as f64 * (3.5 + kp1.ln()) / kp1;
    Ok(RKernel {
        n,
        truncation: big_k,
        kernel,
        l1_norm,
        tail_bound,
        samples,
    })
}

/// `Q_m` up to `degree`: `sum_{i>=m} ((i - m)/i) z^i`, and `Q_0 = 1/3 + sum_{i>=1} z^i`.
pub fn kernel_q(m: usize, degree: usize) -> CircleFunction {
    if m == 0 {
        let head = std::iter::once((0i64, Complex64::new(1.0 / 3.0, 0.0)));
        return CircleFunction::new(
            head.chain((1..=degree as i64).map(|i| (i, Complex64::new(1.0, 0.0)))),
        );
    }
    CircleFunction::new(
        (m..=degree).map(|i| (i as i64, Complex64::new((i - m) as f64 / i as f64, 0.0))),
    )
}

/// Number of monomials `z1^i z2^j z3^k` carrying `phi^(n)` in `dg^2 phi`.
pub fn dd2_multiplicity(n: i64) -> u64 {
    let binom2 = |x: u64| x * x.saturating_sub(1) / 2;
    match n {
        n if n >= 2 => binom2(n as u64),
        n if n <= -1 => binom2((-n) as u64 + 1),
        _ => 0,
    }
}

/// `dg^2 phi` as a sum of monomials `c z1^i z2^j z3^k`, each an elementary
/// tensor of unimodular functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dd2Representation {
    terms: Vec<(Complex64, [i64; 3])>,
}

pub fn separable_rep_dd2(phi: &CircleFunction) -> Dd2Representation {
    let mut terms = Vec::new();
    for (&n, &c) in phi.coefficients() {
        if n >= 2 {
            let s = n - 2;
            for i in 0..=s {
                for j in 0..=s - i {
                    terms.push((c, [i, j, s - i - j]));
                }
            }
        } else if n <= -1 {
            // i, j, k <= -1 with i + j + k = n - 2.
            let s = -(n - 2);
            for i in 1..=s - 2 {
                for j in 1..=s - 1 - i {
                    terms.push((c, [-i, -j, -(s - i - j)]));
                }
            }
        }
    }
    Dd2Representation { terms }
}

impl Dd2Representation {
    pub fn terms(&self) -> &[(Complex64, [i64; 3])] {
        &self.terms
    }

    /// Sum of `|c|`: every monomial factor has sup norm 1 on the circle.
    pub fn projective_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.norm()).sum()
    }

    pub fn eval(&self, z: [Complex64; 3]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                c * z[0].powi(e[0] as i32) * z[1].powi(e[1] as i32) * z[2].powi(e[2] as i32)
            })
            .sum()
    }

    /// Restriction to three grids of points on the circle.
    pub fn on_grids(&self, grids: [Vec<Complex64>; 3]) -> Result<SeparableRepresentation> {
        let mut rep = SeparableRepresentation::new(grids.to_vec())?;
        for (c, e) in &self.terms {
            let factors = (0..3)
                .map(|s| grids[s].iter().map(|z| z.powi(e[s] as i32)).collect())
                .collect();
            rep.push_term(*c, factors)?;
        }
        Ok(rep)
    }
}

/// Samples of `F phi` on a uniform grid over `[lo, hi]`, with
/// `phi(x) = int F phi(a) exp(iax) da` and support inside `[M/2, 2M]`.
#[derive(Debug, Clone)]
pub struct FourierProfile {
    scale: f64,
    lo: f64,
    hi: f64,
    samples: Vec<f64>,
    weights: Vec<f64>,
}

impl FourierProfile {
    pub fn new(scale: f64, lo: f64, hi: f64, samples: Vec<f64>) -> Result<Self> {
        if !(scale > 0.0 && lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bad profile interval [{lo}, {hi}] for M = {scale}"
            )));
        }
        let (min, max) = (scale / 2.0, 2.0 * scale);
        let slack = 1e-12 * max;
        if lo < min - slack || hi > max + slack {
            return Err(Error::SupportViolation { lo, hi, min, max });
        }
        if samples.len() < MIN_PROFILE_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "profile needs at least {MIN_PROFILE_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "profile samples must be finite".into(),
            ));
        }
        let weights = simpson_weights(samples.len(), (hi - lo) / (samples.len() - 1) as f64);
        Ok(FourierProfile {
            scale,
            lo,
            hi,
            samples,
            weights,
        })
    }

    pub fn from_fn(
        scale: f64,
        lo: f64,
        hi: f64,
        count: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let h = (hi - lo) / (count.max(2) - 1) as f64;
        Self::new(
            scale,
            lo,
            hi,
            (0..count).map(|i| f(lo + i as f64 * h)).collect(),
        )
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = (self.hi - self.lo) / (self.samples.len() - 1) as f64;
        self.samples
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(move |(i, (&v, &w))| (self.lo + i as f64 * h, v * w))
    }
}

/// Composite Simpson weights on `count` equispaced points, closing with the
/// 3/8 rule when the number of intervals is odd.
fn simpson_weights(count: usize, h: f64) -> Vec<f64> {
    let intervals = count - 1;
    let mut w = vec![0.0; count];
    let simpson_end = if intervals % 2 == 0 {
        intervals
    } else {
        intervals - 3
    };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        for (off, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[s + off] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// `phi(x) = int F phi(a) exp(iax) da` evaluated by quadrature over the profile.
#[derive(Debug, Clone)]
pub struct BandLimited {
    profile: FourierProfile,
}

impl BandLimited {
    pub fn new(profile: FourierProfile) -> Self {
        BandLimited { profile }
    }

    pub fn profile(&self) -> &FourierProfile {
        &self.profile
    }
}

impl Smooth for BandLimited {
    fn domain(&self) -> Domain {
        Domain::Line
    }

    fn derivative(&self, order: usize, z: Complex64) -> Complex64 {
        self.profile
            .nodes()
            .map(|(a, wv)| {
                Complex64::new(0.0, a).powu(order as u32) * (Complex64::new(0.0, a) * z).exp() * wv
            })
            .sum()
    }
}

/// `-int int int_{s,t,u > 0} F phi(s+t+u) exp(i(s lambda + t mu + u nu))`.
///
/// With `a = s + t + u` the inner integral runs over the simplex scaled by
/// `a`; the simplex is mapped to the unit square by `(x, (1-x) y)` and
/// integrated by tensor Gauss-Legendre, the outer integral by the profile's
/// Simpson rule.
pub fn bandlimited_dd2_fourier(
    profile: &FourierProfile,
    lambda: f64,
    mu: f64,
    nu: f64,
) -> Complex64 {
    let gl = GaussLegendre::new(NonZeroUsize::new(SIMPLEX_GL_ORDER).expect("positive order"));
    let pairs = gl.as_node_weight_pairs();
    let mut cells = Vec::with_capacity(pairs.len() * pairs.len());
    for &(xn, xw) in pairs {
        let x = 0.5 * (xn + 1.0);
        for &(yn, yw) in pairs {
            let y = 0.5 * (yn + 1.0);
            let phase = x * lambda + (1.0 - x) * y * mu + (1.0 - x) * (1.0 - y) * nu;
            cells.push((phase, 0.25 * xw * yw * (1.0 - x)));
        }
    }
    let total: Complex64 = profile
        .nodes()
        .map(|(a, wv)| {
            let simplex: Complex64 = cells
                .iter()
                .map(|&(p, w)| Complex64::from_polar(w, a * p))
                .sum();
            simplex * (a * a * wv)
        })
        .sum();
    -total
}

/// `dg^2 phi(lambda, mu, nu)` from the recursion applied to the
/// quadrature-reconstructed `phi`.
pub fn bandlimited_dd2_direct(
    profile: &FourierProfile,
    lambda: f64,
    mu: f64,
    nu: f64,
) -> Result<Complex64> {
    divided_difference_real(&BandLimited::new(profile.clone()), &[lambda, mu, nu])
}
