//! Batch property checks behind `opint audit`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::besov::{
    besov_seminorm_lp, kernel_q, kernel_r, separable_rep_dd2, Window, OTS_RATIO_BRACKET,
    R_PLATEAU_EPS,
};
use crate::derivatives_selfadjoint::{
    functional_difference, higher_derivative, monomial_oracle, perturbation_difference,
    perturbation_identity_sides, relative_residual,
};
use crate::derivatives_unitary::{
    decomposition_extrapolated, fd_oracle_unitary, stated_formula_unitary, DECOMPOSITION_AUDIT_T,
};
use crate::finite_difference::default_step;
use crate::moi::{moi_eval, moi_separable_eval, projective_norm, SeparableRepresentation};
use crate::random;
use crate::scalar_functions::{dd_tensor, divided_difference_real, CircleFunction, ScalarFunction};
use crate::spectral::{apply_function, decompose_hermitian, operator_norm, DenseOperator};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Kernels,
    Unitary,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    KnownDiscrepancy,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::KnownDiscrepancy => "known-discrepancy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub check: String,
    pub instance: String,
    pub residual: f64,
    pub bound: f64,
    pub status: Status,
}

impl AuditRow {
    fn bounded(check: &str, instance: String, residual: f64, bound: f64) -> Self {
        let status = if residual <= bound {
            Status::Pass
        } else {
            Status::Fail
        };
        AuditRow {
            check: check.to_string(),
            instance,
            residual,
            bound,
            status,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditOptions {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
}

pub fn run_audit(opts: &AuditOptions) -> Result<Vec<AuditRow>> {
    let mut rows = Vec::new();
    let run = |s: Suite| opts.suite == s || opts.suite == Suite::All;
    if run(Suite::Lemmas) {
        lemmas(
            &mut ChaCha8Rng::seed_from_u64(opts.seed),
            opts.trials,
            &mut rows,
        )?;
    }
    if run(Suite::Kernels) {
        kernels(
            &mut ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1)),
            opts.trials,
            &mut rows,
        )?;
    }
    if run(Suite::Unitary) {
        unitary(
            &mut ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2)),
            opts.trials,
            &mut rows,
        )?;
    }
    Ok(rows)
}

pub fn failures(rows: &[AuditRow]) -> usize {
    rows.iter().filter(|r| r.status == Status::Fail).count()
}

pub fn render_text(rows: &[AuditRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(
            out,
            "{:<28} {:<36} residual={:.6e} bound={:.6e} {}",
            r.check,
            r.instance,
            r.residual,
            r.bound,
            r.status.as_str()
        );
    }
    let known = rows
        .iter()
        .filter(|r| r.status == Status::KnownDiscrepancy)
        .count();
    let _ = writeln!(
        out,
        "summary: {} checks, {} failures, {} known-discrepancy",
        rows.len(),
        failures(rows),
        known
    );
    out
}

pub fn render_jsonl(rows: &[AuditRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let rec = json!({
            "check": r.check,
            "instance": r.instance,
            "residual": r.residual,
            "bound": r.bound,
            "status": r.status.as_str(),
        });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    out
}

fn random_line_function(rng: &mut ChaCha8Rng) -> (String, ScalarFunction) {
    match rng.gen_range(0..3) {
        0 => {
            let deg = rng.gen_range(1..=6);
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (format!("poly{deg}"), ScalarFunction::Polynomial(coeffs))
        }
        1 => {
            let rate = rng.gen_range(0.2..1.5);
            (format!("exp{rate:.3}"), ScalarFunction::Exp(rate))
        }
        _ => {
            let rate = rng.gen_range(0.2..2.0);
            (format!("sin{rate:.3}"), ScalarFunction::Sin(rate))
        }
    }
}

fn functional_scale(phi: &ScalarFunction, a: &DenseOperator, k: &DenseOperator) -> Result<f64> {
    let da = decompose_hermitian(a)?;
    let db = decompose_hermitian(&DenseOperator::new(a.matrix() + k.matrix())?)?;
    let fa = apply_function(&da, phi)?.operator_norm();
    let fb = apply_function(&db, phi)?.operator_norm();
    Ok(fa.max(fb).max(1.0))
}

fn lemmas(rng: &mut ChaCha8Rng, trials: usize, rows: &mut Vec<AuditRow>) -> Result<()> {
    for t in 0..trials {
        let n = rng.gen_range(2..=6);
        let a = random::hermitian(rng, n, 1.0);
        let k = random::hermitian(rng, n, 1.0);
        let (name, phi) = random_line_function(rng);
        let scale = functional_scale(&phi, &a, &k)?;
        let inst = format!("trial={t} n={n} phi={name}");

        let doi = perturbation_difference(&phi, &a, &k)?;
        let exact = functional_difference(&phi, &a, &k)?;
        let r = operator_norm(&(doi.matrix() - exact.matrix())) / scale;
        rows.push(AuditRow::bounded(
            "difference_formula",
            inst.clone(),
            r,
            1e-10,
        ));

        let (lhs, rhs) = perturbation_identity_sides(&phi, &a, &k)?;
        let r = operator_norm(&(lhs.matrix() - rhs.matrix())) / scale;
        rows.push(AuditRow::bounded(
            "perturbation_identity",
            inst.clone(),
            r,
            1e-10,
        ));

        let p = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=p);
        let formula = higher_derivative(&ScalarFunction::monomial(p), &a, &k, m)?;
        let words = monomial_oracle(p, &a, &k, m)?;
        rows.push(AuditRow::bounded(
            "derivative_words",
            format!("trial={t} n={n} p={p} m={m}"),
            relative_residual(&formula, &words),
            1e-11,
        ));

        let (spread, dense_gap, norm, bound) = separable_trial(rng, n)?;
        let sinst = format!("trial={t} n={n} order=3");
        rows.push(AuditRow::bounded(
            "representation_independence",
            sinst.clone(),
            spread,
            1e-12,
        ));
        rows.push(AuditRow::bounded(
            "separable_vs_dense",
            sinst.clone(),
            dense_gap,
            1e-11,
        ));
        rows.push(AuditRow::bounded(
            "projective_bound",
            sinst,
            norm,
            bound + 1e-10,
        ));

        let (r, kk) = divided_difference_trial(rng, &phi)?;
        rows.push(AuditRow::bounded(
            "dd_symmetry",
            format!("trial={t} k={kk} phi={name}"),
            r,
            1e-9,
        ));
    }
    Ok(())
}

/// Evaluates a random order-3 separable representation, a regrouping of it,
/// and its induced dense kernel. Returns the regrouping spread and the
/// dense/separable gap (both relative to the projective bound), and
/// `||MOI||` with its projective bound.
fn separable_trial(rng: &mut ChaCha8Rng, n: usize) -> Result<(f64, f64, f64, f64)> {
    let ops: Vec<DenseOperator> = (0..3).map(|_| random::hermitian(rng, n, 1.0)).collect();
    let decomps = ops
        .iter()
        .map(decompose_hermitian)
        .collect::<Result<Vec<_>>>()?;
    let grids: Vec<Vec<Complex64>> = decomps.iter().map(|d| d.eigenvalues().to_vec()).collect();
    let ts: Vec<DenseOperator> = (0..2).map(|_| random::general(rng, n)).collect();
    let drefs: Vec<_> = decomps.iter().collect();
    let trefs: Vec<_> = ts.iter().collect();

    let terms = rng.gen_range(1..=4);
    let mut base = SeparableRepresentation::new(grids.clone())?;
    let mut parts = Vec::new();
    for _ in 0..terms {
        let w = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let factors: Vec<Vec<Complex64>> = grids
            .iter()
            .map(|g| {
                g.iter()
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        base.push_term(w, factors.clone())?;
        let split = rng.gen_range(0.1..0.9);
        parts.push((w * split, factors.clone()));
        parts.push((w * (1.0 - split), factors));
    }
    parts.shuffle(rng);
    let mut regrouped = SeparableRepresentation::new(grids)?;
    for (w, f) in parts {
        regrouped.push_term(w, f)?;
    }
    let x = moi_separable_eval(&base, &drefs, &trefs)?;
    let y = moi_separable_eval(&regrouped, &drefs, &trefs)?;
    let dense = moi_eval(&base.induced_kernel(), &drefs, &trefs)?;
    let prod: f64 = ts.iter().map(|t| t.operator_norm()).product();
    let bound = projective_norm(&base) * prod;
    let scale = bound.max(1.0);
    let spread = operator_norm(&(x.operator.matrix() - y.operator.matrix())) / scale;
    let gap = operator_norm(&(x.operator.matrix() - dense.operator.matrix())) / scale;
    Ok((spread, gap, dense.operator.operator_norm(), bound))
}

fn divided_difference_trial(rng: &mut ChaCha8Rng, phi: &ScalarFunction) -> Result<(f64, usize)> {
    let k = rng.gen_range(1..=4);
    // Separated nodes: jittered points of a grid with spacing 0.5.
    let mut nodes: Vec<f64> = (0..=k)
        .map(|i| -1.0 + 0.5 * i as f64 + rng.gen_range(-0.1..0.1))
        .collect();
    let base = divided_difference_real(phi, &nodes)?;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        nodes.shuffle(rng);
        let v = divided_difference_real(phi, &nodes)?;
        worst = worst.max((v - base).norm() / base.norm().max(1.0));
    }
    // Recursion in the shuffled order.
    let head = divided_difference_real(phi, &nodes[..k])?;
    let tail = divided_difference_real(phi, &nodes[1..])?;
    let rec = (head - tail) / (nodes[0] - nodes[k]);
    let v = divided_difference_real(phi, &nodes)?;
    worst = worst.max((rec - v).norm() / v.norm().max(1.0));
    Ok((worst, k))
}

fn kernels(rng: &mut ChaCha8Rng, trials: usize, rows: &mut Vec<AuditRow>) -> Result<()> {
    let win = Window::default();
    let mut partition = 0.0f64;
    let mut outside = 0.0f64;
    for i in 0..10_000 {
        let x = 2f64.powf(-20.0 + 40.0 * i as f64 / 9_999.0);
        partition = partition.max((win.partition_sum(x) - 1.0).abs());
        if !(0.5 < x && x < 2.0) {
            outside = outside.max(win.w(x));
        }
    }
    rows.push(AuditRow::bounded(
        "window_partition",
        "points=10000".into(),
        partition,
        1e-12,
    ));
    rows.push(AuditRow::bounded(
        "window_support",
        "points=10000".into(),
        outside,
        0.0,
    ));

    let table = (1..=10)
        .map(|k| kernel_r(1 << k))
        .collect::<Result<Vec<_>>>()?;
    let plateau = table.last().expect("nonempty table").l1_norm;
    for rk in &table {
        rows.push(AuditRow::bounded(
            "r_kernel_l1",
            format!("n={} tail<={:.3e}", rk.n, rk.tail_bound),
            rk.l1_norm,
            (1.0 + R_PLATEAU_EPS) * plateau,
        ));
    }

    for t in 0..trials {
        let degree = rng.gen_range(2..=16);
        let phi = random::trig_polynomial(rng, degree, false);
        let points = rng.gen_range(2..=5);
        let grid = random::circle_grid(rng, points);
        let tensor = dd_tensor(&phi, &grid, 2);
        let rep = separable_rep_dd2(&phi);
        let sep = rep.on_grids([grid.clone(), grid.clone(), grid])?;
        let inst = format!("trial={t} degree={degree}");
        rows.push(AuditRow::bounded(
            "dd2_fourier",
            inst.clone(),
            sep.induced_kernel().max_abs_diff(&tensor),
            1e-10,
        ));
        let ratio = rep.projective_norm() / besov_seminorm_lp(&phi, 2, &win);
        let (lo, hi) = OTS_RATIO_BRACKET;
        let status = if (lo..=hi).contains(&ratio) {
            Status::Pass
        } else {
            Status::Fail
        };
        rows.push(AuditRow {
            check: "dd2_projective_ratio".into(),
            instance: inst,
            residual: ratio,
            bound: hi,
            status,
        });
    }

    let f = random::trig_polynomial(rng, 32, true);
    for m in [1usize, 2, 5, 16, 32] {
        let lhs = f.convolve(&kernel_q(m, 32));
        let rk = kernel_r(m)?;
        let rhs = f.add(&f.convolve(&rk.kernel).map_coefficients(|_, v| -v));
        let gap = (1..=32)
            .map(|i| (lhs.coefficient(i) - rhs.coefficient(i)).norm())
            .fold(0.0, f64::max);
        rows.push(AuditRow::bounded(
            "q_identity",
            format!("m={m} degree=32"),
            gap,
            1e-14,
        ));
    }
    Ok(())
}

fn unitary(rng: &mut ChaCha8Rng, trials: usize, rows: &mut Vec<AuditRow>) -> Result<()> {
    for t in 0..trials {
        let n = rng.gen_range(1..=5);
        let u = random::unitary(rng, n);
        let a = random::hermitian(rng, n, 1.0);
        let degree = rng.gen_range(1..=8);
        let phi = random::trig_polynomial(rng, degree, false);
        let inst = format!("trial={t} n={n} degree={degree}");

        let f1 = stated_formula_unitary(&phi, &u, &a, 1)?;
        let o1 = fd_oracle_unitary(&phi, &u, &a, 1, default_step(1))?;
        rows.push(AuditRow::bounded(
            "unitary_first_order",
            inst.clone(),
            relative_residual(&f1, &o1),
            1e-7,
        ));

        let o2 = fd_oracle_unitary(&phi, &u, &a, 2, default_step(2))?;
        let dec = decomposition_extrapolated(&phi, &u, &a, DECOMPOSITION_AUDIT_T)?;
        rows.push(AuditRow::bounded(
            "unitary_second_decomposition",
            inst.clone(),
            relative_residual(&o2, &dec),
            1e-6,
        ));

        let f2 = stated_formula_unitary(&phi, &u, &a, 2)?;
        let r = relative_residual(&f2, &o2);
        let status = if r <= 1e-6 {
            Status::Pass
        } else {
            Status::KnownDiscrepancy
        };
        rows.push(AuditRow {
            check: "unitary_second_stated".into(),
            instance: inst,
            residual: r,
            bound: 1e-6,
            status,
        });
    }
    for t in 0..trials.clamp(1, 5) {
        let uval = Complex64::from_polar(1.0, rng.gen_range(-3.0..3.0));
        let aval: f64 = rng.gen_range(0.2..1.5);
        let (u, a) = (
            DenseOperator::diagonal(&[uval]),
            DenseOperator::diagonal(&[Complex64::new(aval, 0.0)]),
        );
        let z = CircleFunction::monomial(1);
        let gap = (stated_formula_unitary(&z, &u, &a, 2)?.matrix()[(0, 0)]
            - fd_oracle_unitary(&z, &u, &a, 2, default_step(2))?.matrix()[(0, 0)])
            .norm();
        let forced = aval * aval;
        let status = if (gap - forced).abs() <= 1e-10 {
            Status::KnownDiscrepancy
        } else {
            Status::Fail
        };
        rows.push(AuditRow {
            check: "unitary_second_scalar".into(),
            instance: format!("trial={t} u=exp(i{:.3}) a={aval:.3}", uval.arg()),
            residual: gap,
            bound: forced,
            status,
        });
    }
    Ok(())
}
