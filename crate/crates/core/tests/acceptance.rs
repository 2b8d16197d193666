//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::Instant;

use common::*;
use num_complex::Complex64;
use opint::besov::{
    bandlimited_dd2_direct, bandlimited_dd2_fourier, besov_seminorm_diff, besov_seminorm_lp,
    kernel_r, make_window, separable_rep_dd2, FourierProfile, Window, OTS_RATIO_BRACKET,
    R_PLATEAU_EPS, SEMINORM_BRACKET_C,
};
use opint::cli::{run_audit, AuditOptions, Status, Suite};
use opint::derivatives_selfadjoint::{
    higher_derivative, perturbation_difference, perturbation_identity_sides,
};
use opint::derivatives_unitary::{
    audit_unitary, decomposition_extrapolated, stated_formula_unitary, DECOMPOSITION_AUDIT_T,
};
use opint::moi::{moi_eval, moi_separable_eval, projective_norm, SeparableRepresentation};
use opint::random;
use opint::scalar_functions::{
    dd_tensor, divided_difference, CircleFunction, ScalarFunction, Smooth,
};
use opint::spectral::{decompose_hermitian, DenseOperator};
use opint::CMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn line_fn(rng: &mut ChaCha8Rng, allow_poly: bool) -> ScalarFunction {
    match rng.gen_range(if allow_poly { 0 } else { 1 }..3) {
        0 => {
            let deg = rng.gen_range(0..=6);
            ScalarFunction::Polynomial((0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect())
        }
        1 => ScalarFunction::Exp(rng.gen_range(0.2..1.5)),
        _ => ScalarFunction::Sin(rng.gen_range(0.2..2.0)),
    }
}

fn scale_of(phi: &ScalarFunction, a: &CMatrix, k: &CMatrix) -> f64 {
    opnorm(&line_function(phi, a))
        .max(opnorm(&line_function(phi, &(a + k))))
        .max(1.0)
}

fn difference_formula() -> Outcome {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.gen_range(2..=8);
        let a = random::hermitian(&mut r, n, 1.0);
        let k = random::hermitian(&mut r, n, 1.0);
        let phi = line_fn(&mut r, true);
        let got = perturbation_difference(&phi, &a, &k).unwrap();
        let exact =
            line_function(&phi, &(a.matrix() + k.matrix())) - line_function(&phi, a.matrix());
        let res = opnorm(&(got.matrix() - exact)) / scale_of(&phi, a.matrix(), k.matrix());
        worst = worst.max(res);
    }
    outcome(
        worst <= 1e-10,
        format!("200 instances, worst scaled residual {worst:.3e} (bound 1e-10)"),
    )
}

fn word_sum_oracle() -> Outcome {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for p in 1..=6 {
        for m in 1..=p {
            for n in 1..=5 {
                let a = random::hermitian(&mut r, n, 1.0);
                let k = random::hermitian(&mut r, n, 1.0);
                let f = higher_derivative(&ScalarFunction::monomial(p), &a, &k, m).unwrap();
                worst = worst.max(rel(f.matrix(), &word_sum(a.matrix(), k.matrix(), p, m)));
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-11,
        format!("{cases} cases, worst relative residual {worst:.3e} (bound 1e-11)"),
    )
}

fn fd_oracle_agreement() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut r = rng(1000 + seed);
        let n = r.gen_range(1..=5);
        let a = random::hermitian(&mut r, n, 1.0);
        let k = random::hermitian(&mut r, n, 1.0);
        let phi = line_fn(&mut r, false);
        for m in 1..=3 {
            let f = higher_derivative(&phi, &a, &k, m).unwrap();
            let path = |t: f64| line_function(&phi, &(a.matrix() + k.matrix() * c(t)));
            let h0 = if m < 3 { 1e-2 } else { 5e-2 };
            worst = worst.max(rel(f.matrix(), &fd_derivative(&path, m, h0)));
        }
    }
    outcome(
        worst <= 1e-6,
        format!("50 seeds x m=1..3, worst relative residual {worst:.3e} (bound 1e-6)"),
    )
}

fn square_second_derivative() -> Outcome {
    let mut r = rng(104);
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let a = random::hermitian(&mut r, n, 2.0);
        let k = random::hermitian(&mut r, n, 1.0);
        let f = higher_derivative(&ScalarFunction::monomial(2), &a, &k, 2).unwrap();
        worst = worst.max(rel(f.matrix(), &(k.matrix() * k.matrix() * c(2.0))));
    }
    outcome(
        worst <= 1e-12,
        format!("x^2, m=2 vs 2K^2, worst residual {worst:.3e} (bound 1e-12)"),
    )
}

fn perturbation_identity() -> Outcome {
    let mut r = rng(105);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.gen_range(2..=7);
        let a = random::hermitian(&mut r, n, 1.0);
        let k = random::hermitian(&mut r, n, 1.0);
        let phi = line_fn(&mut r, true);
        let (lhs, rhs) = perturbation_identity_sides(&phi, &a, &k).unwrap();
        let res = opnorm(&(lhs.matrix() - rhs.matrix())) / scale_of(&phi, a.matrix(), k.matrix());
        worst = worst.max(res);
    }
    outcome(
        worst <= 1e-10,
        format!("100 instances, worst scaled residual {worst:.3e} (bound 1e-10)"),
    )
}

struct SeparableCase {
    decomps: Vec<opint::spectral::SpectralDecomposition>,
    ts: Vec<DenseOperator>,
    rep: SeparableRepresentation,
    parts: Vec<(Complex64, Vec<Vec<Complex64>>)>,
}

fn separable_case(r: &mut ChaCha8Rng) -> SeparableCase {
    let n = r.gen_range(1..=5);
    let order = r.gen_range(2..=4);
    let decomps: Vec<_> = (0..order)
        .map(|_| decompose_hermitian(&random::hermitian(r, n, 1.0)).unwrap())
        .collect();
    let grids: Vec<Vec<Complex64>> = decomps.iter().map(|d| d.eigenvalues().to_vec()).collect();
    let ts: Vec<DenseOperator> = (0..order - 1).map(|_| random::general(r, n)).collect();
    let mut rep = SeparableRepresentation::new(grids.clone()).unwrap();
    let mut parts = Vec::new();
    for _ in 0..r.gen_range(1..=5) {
        let w = Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let factors: Vec<Vec<Complex64>> = grids
            .iter()
            .map(|g| {
                g.iter()
                    .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        rep.push_term(w, factors.clone()).unwrap();
        // Regrouping: split the weight in three and rescale factors.
        let (s1, s2) = (r.gen_range(0.1..0.5), r.gen_range(0.1..0.4));
        let lam = Complex64::from_polar(r.gen_range(0.5..2.0), r.gen_range(-3.0..3.0));
        let mut scaled = factors.clone();
        scaled[0].iter_mut().for_each(|z| *z *= lam);
        parts.push((w * s1 / lam, scaled));
        parts.push((w * s2, factors.clone()));
        parts.push((w * (1.0 - s1 - s2), factors));
    }
    parts.shuffle(r);
    SeparableCase {
        decomps,
        ts,
        rep,
        parts,
    }
}

fn representation_independence() -> Outcome {
    let mut r = rng(106);
    let (mut spread, mut gap) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let case = separable_case(&mut r);
        let drefs: Vec<_> = case.decomps.iter().collect();
        let trefs: Vec<_> = case.ts.iter().collect();
        let mut regrouped = SeparableRepresentation::new(case.rep.grids().to_vec()).unwrap();
        for (w, f) in &case.parts {
            regrouped.push_term(*w, f.clone()).unwrap();
        }
        let x = moi_separable_eval(&case.rep, &drefs, &trefs)
            .unwrap()
            .operator;
        let y = moi_separable_eval(&regrouped, &drefs, &trefs)
            .unwrap()
            .operator;
        let dense = moi_eval(&case.rep.induced_kernel(), &drefs, &trefs)
            .unwrap()
            .operator;
        let scale = (projective_norm(&case.rep)
            * case.ts.iter().map(|t| opnorm(t.matrix())).product::<f64>())
        .max(1.0);
        spread = spread.max(opnorm(&(x.matrix() - y.matrix())) / scale);
        gap = gap.max(rel(x.matrix(), dense.matrix()));
    }
    outcome(
        spread <= 1e-12 && gap <= 1e-11,
        format!("100 reps, regrouping spread {spread:.3e} (bound 1e-12), separable vs dense {gap:.3e} (bound 1e-11)"),
    )
}

fn projective_bound() -> Outcome {
    let mut r = rng(107);
    let mut worst = f64::MIN;
    for _ in 0..200 {
        let case = separable_case(&mut r);
        let drefs: Vec<_> = case.decomps.iter().collect();
        let trefs: Vec<_> = case.ts.iter().collect();
        let bound = projective_norm(&case.rep)
            * case.ts.iter().map(|t| opnorm(t.matrix())).product::<f64>();
        let sep = moi_separable_eval(&case.rep, &drefs, &trefs)
            .unwrap()
            .operator;
        let dense = moi_eval(&case.rep.induced_kernel(), &drefs, &trefs)
            .unwrap()
            .operator;
        worst = worst
            .max(opnorm(sep.matrix()) - bound)
            .max(opnorm(dense.matrix()) - bound);
    }
    outcome(
        worst <= 1e-10,
        format!("200 instances, max(||MOI|| - bound) = {worst:.3e} (slack 1e-10)"),
    )
}

fn divided_difference_symmetry() -> Outcome {
    let mut r = rng(108);
    let (mut sym, mut ident) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let k = r.gen_range(1..=5);
        let phi = line_fn(&mut r, true);
        let mut nodes: Vec<Complex64> = (0..=k)
            .map(|i| c(-1.5 + 0.6 * i as f64 + r.gen_range(-0.15..0.15)))
            .collect();
        nodes.shuffle(&mut r);
        let v = divided_difference(&phi, &nodes).unwrap();
        let oracle = dd_explicit(&|z| phi.value(z), &nodes);
        sym = sym.max((v - oracle).norm() / oracle.norm().max(1.0));
        let head = divided_difference(&phi, &nodes[..k]).unwrap();
        let tail = divided_difference(&phi, &nodes[1..]).unwrap();
        let rec = (head - tail) / (nodes[0] - nodes[k]);
        ident = ident.max((rec - v).norm() / v.norm().max(1.0));
    }
    outcome(
        sym <= 1e-9 && ident <= 1e-9,
        format!("500 permutations, vs explicit sum {sym:.3e}, recursion identity {ident:.3e} (bound 1e-9)"),
    )
}

fn fourier_cross_check() -> Outcome {
    let mut r = rng(109);
    let win = Window::default();
    let (mut tri, mut sep) = (0.0f64, 0.0f64);
    let (mut lo, mut hi) = (f64::MAX, 0.0f64);
    for _ in 0..30 {
        let degree = r.gen_range(2..=16);
        let phi = random::trig_polynomial(&mut r, degree, false);
        let grid = random::circle_grid(&mut r, 4);
        let tensor = dd_tensor(&phi, &grid, 2);
        for (a, &za) in grid.iter().enumerate() {
            for (b, &zb) in grid.iter().enumerate() {
                for (cc, &zc) in grid.iter().enumerate() {
                    tri = tri
                        .max((tensor.get(&[a, b, cc]) - dd2_triple_sum(&phi, [za, zb, zc])).norm());
                }
            }
        }
        let rep = separable_rep_dd2(&phi);
        let kernel = rep
            .on_grids([grid.clone(), grid.clone(), grid])
            .unwrap()
            .induced_kernel();
        sep = sep.max(kernel.max_abs_diff(&tensor));
        let ratio = rep.projective_norm() / besov_seminorm_lp(&phi, 2, &win);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let (blo, bhi) = OTS_RATIO_BRACKET;
    outcome(
        tri <= 1e-10 && sep <= 1e-10 && lo >= blo && hi <= bhi,
        format!(
            "30 polynomials, triple sum {tri:.3e}, separable {sep:.3e} (bound 1e-10), ratio range [{lo:.4}, {hi:.4}] in [{blo}, {bhi}]"
        ),
    )
}

fn unitary_first_order() -> Outcome {
    let mut r = rng(110);
    let i = Complex64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = r.gen_range(1..=6);
        let u = random::unitary(&mut r, n);
        let a = random::hermitian(&mut r, n, 1.0);
        let degree = r.gen_range(1..=8);
        let phi = random::trig_polynomial(&mut r, degree, false);
        let f = stated_formula_unitary(&phi, &u, &a, 1).unwrap();
        let path = |t: f64| circle_function(&phi, &(expm(&(a.matrix() * (i * t))) * u.matrix()));
        worst = worst.max(rel(f.matrix(), &fd_derivative(&path, 1, 1e-2)));
    }
    outcome(
        worst <= 1e-7,
        format!("50 instances, worst relative residual {worst:.3e} (bound 1e-7)"),
    )
}

fn unitary_second_order() -> Outcome {
    let mut r = rng(111);
    let i = Complex64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = r.gen_range(1..=5);
        let u = random::unitary(&mut r, n);
        let a = random::hermitian(&mut r, n, 1.0);
        let degree = r.gen_range(1..=8);
        let phi = random::trig_polynomial(&mut r, degree, false);
        let dec = decomposition_extrapolated(&phi, &u, &a, DECOMPOSITION_AUDIT_T).unwrap();
        let path = |t: f64| circle_function(&phi, &(expm(&(a.matrix() * (i * t))) * u.matrix()));
        worst = worst.max(rel(&fd_derivative(&path, 2, 1e-2), dec.matrix()));
    }
    // 1x1 with phi = z: compact formula 0, chain rule -a^2 u.
    let mut scalar_gap = 0.0f64;
    let mut labelled = true;
    for _ in 0..5 {
        let uval = Complex64::from_polar(1.0, r.gen_range(-3.0..3.0));
        let aval: f64 = r.gen_range(0.2..1.5);
        let u = DenseOperator::diagonal(&[uval]);
        let a = DenseOperator::diagonal(&[c(aval)]);
        let report = audit_unitary(&CircleFunction::monomial(1), &u, &a, 2).unwrap();
        let stated = report.formula.matrix()[(0, 0)];
        let oracle = report.oracles["fd"].matrix()[(0, 0)];
        scalar_gap = scalar_gap
            .max(stated.norm())
            .max((oracle + aval * aval * uval).norm())
            .max((report.residuals["fd"] - aval * aval).abs());
    }
    let rows = run_audit(&AuditOptions {
        suite: Suite::Unitary,
        trials: 3,
        seed: 5,
    })
    .unwrap();
    for row in rows.iter().filter(|r| r.check == "unitary_second_scalar") {
        labelled &=
            row.status == Status::KnownDiscrepancy && (row.residual - row.bound).abs() <= 1e-10;
    }
    outcome(
        worst <= 1e-6 && scalar_gap <= 1e-10 && labelled,
        format!(
            "(a) extrapolated decomposition vs fd {worst:.3e} (bound 1e-6); (b) 1x1 phi=z deviation from 0 / -a^2 u / |a^2 u| {scalar_gap:.3e} (bound 1e-10), labelled known-discrepancy: {labelled}"
        ),
    )
}

fn window_invariants() -> Outcome {
    let mut worst = 0.0f64;
    let mut support_ok = true;
    for sharpness in [0.5, 1.0, 2.0] {
        let w = make_window(sharpness).unwrap();
        for i in 0..10_000 {
            let x = 2f64.powf(-20.0 + 40.0 * i as f64 / 9_999.0);
            worst = worst.max((w.partition_sum(x) - 1.0).abs());
            let v = w.w(x);
            support_ok &= v >= 0.0 && ((0.5 < x && x < 2.0) || v == 0.0);
        }
        support_ok &= w.w(0.5) == 0.0 && w.w(2.0) == 0.0 && w.w(0.0) == 0.0;
    }
    outcome(
        worst <= 1e-12 && support_ok,
        format!("partition of unity error {worst:.3e} (bound 1e-12), support exact: {support_ok}"),
    )
}

fn r_kernel_plateau() -> Outcome {
    let table: Vec<_> = (1..=10).map(|k| kernel_r(1 << k).unwrap()).collect();
    let plateau = table[9].l1_norm;
    let max = table.iter().map(|t| t.l1_norm).fold(0.0, f64::max);
    let values: Vec<String> = table.iter().map(|t| format!("{:.3}", t.l1_norm)).collect();
    let step = (table[9].l1_norm - table[0].l1_norm) / 9.0;
    let monotone = table.windows(2).all(|w| w[1].l1_norm > w[0].l1_norm);
    outcome(
        max <= (1.0 + R_PLATEAU_EPS) * plateau,
        format!(
            "||R_2^k||_1, k=1..10: [{}], max/plateau {:.4} (bound {}); monotone: {monotone}, mean growth {step:.3} per doubling, so the plateau is the largest value rather than a limit",
            values.join(", "),
            max / plateau,
            1.0 + R_PLATEAU_EPS
        ),
    )
}

fn seminorm_equivalence() -> Outcome {
    let win = Window::default();
    let (mut lo, mut hi) = (f64::MAX, 0.0f64);
    for d in 1..=2 {
        for j in 0..=6 {
            let phi = CircleFunction::monomial(1 << j);
            let ratio = besov_seminorm_diff(&phi, d).unwrap() / besov_seminorm_lp(&phi, d, &win);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    let cb = SEMINORM_BRACKET_C;
    outcome(
        lo >= 1.0 / cb && hi <= cb,
        format!("z^(2^j), j<=6, d in {{1,2}}: ratio range [{lo:.4}, {hi:.4}] in [1/{cb}, {cb}]"),
    )
}

fn bandlimited_identity() -> Outcome {
    let bump = |a: f64| {
        let u = (a - 2.5) / 1.5;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u * u)).exp()
        }
    };
    let profile = FourierProfile::from_fn(2.0, 1.0, 4.0, 1025, bump).unwrap();
    let mut r = rng(115);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let (l, m, n) = (
            r.gen_range(-1.5..1.5),
            r.gen_range(-1.5..1.5),
            r.gen_range(-1.5..1.5),
        );
        let lhs = bandlimited_dd2_direct(&profile, l, m, n).unwrap();
        let rhs = bandlimited_dd2_fourier(&profile, l, m, n);
        worst = worst.max((lhs - rhs).norm());
    }
    outcome(
        worst <= 1e-4,
        format!("5 random triples, worst |LHS - RHS| {worst:.3e} (bound 1e-4)"),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = opint::cli::run(
        std::iter::once("opint").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, out)
}

fn determinism() -> Outcome {
    let base = [
        "audit", "--suite", "all", "--trials", "4", "--seed", "11", "--format", "jsonl",
    ];
    let runs: Vec<(i32, Vec<u8>)> = (0..3).map(|_| run_cli(&base)).collect();
    let same_runs = runs.iter().all(|r| r.1 == runs[0].1);
    let with = |t: &str| {
        let mut args = vec!["--threads", t];
        args.extend_from_slice(&base);
        run_cli(&args)
    };
    let (one, four) = (with("1"), with("4"));
    let same_threads = one.1 == four.1 && one.1 == runs[0].1;
    let bin = std::process::Command::new(env!("CARGO_BIN_EXE_opint"))
        .args(["--threads", "4"])
        .args(base)
        .output()
        .expect("run opint binary");
    let same_binary = bin.stdout == runs[0].1;
    outcome(
        same_runs && same_threads && same_binary && !runs[0].1.is_empty(),
        format!(
            "3 runs identical: {same_runs}; threads 1 vs 4 identical: {same_threads}; binary matches: {same_binary}; {} bytes, exit {}",
            runs[0].1.len(),
            runs[0].0
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("difference formula exactness", difference_formula),
        ("derivative vs word-sum oracle", word_sum_oracle),
        ("derivative vs finite differences", fd_oracle_agreement),
        ("second derivative of x^2", square_second_derivative),
        ("perturbation identity", perturbation_identity),
        ("representation independence", representation_independence),
        ("projective norm bound", projective_bound),
        ("divided difference symmetry", divided_difference_symmetry),
        (
            "second divided difference Fourier expansion",
            fourier_cross_check,
        ),
        ("unitary first derivative", unitary_first_order),
        ("unitary second derivative audit", unitary_second_order),
        ("window invariants", window_invariants),
        ("R_n L1 plateau", r_kernel_plateau),
        ("Besov seminorm equivalence", seminorm_equivalence),
        ("band-limited Fourier identity", bandlimited_identity),
        ("audit determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {tag} {name}: {} [{:.2}s]",
            i + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
        if !out.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
