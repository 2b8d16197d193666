//! The `opint` command line: `derive`, `audit` and `besov`.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a numerical
//! check exceeds its bound. Reports go to stdout, diagnostics to stderr.

pub mod audit;
pub mod parse;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::besov::{besov_seminorm_diff, besov_seminorm_lp, make_window, DEFAULT_SHARPNESS};
use crate::derivatives_selfadjoint::{
    fd_oracle, higher_derivative, polynomial_oracle, relative_residual,
};
use crate::derivatives_unitary::{fd_oracle_unitary, stated_formula_unitary};
use crate::finite_difference::default_step;
use crate::scalar_functions::Function;
use crate::spectral::DenseOperator;
use crate::{Error, Result};

pub use audit::{run_audit, AuditOptions, AuditRow, Status, Suite};
pub use parse::{parse_function_spec, parse_matrix, serialize_matrix, FunctionSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CHECK: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "opint",
    version,
    about = "Derivatives of operator functions via multiple operator integrals"
)]
pub struct Cli {
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an m-th derivative along a self-adjoint or unitary path.
    Derive(DeriveArgs),
    /// Run batches of randomized property checks.
    Audit(AuditArgs),
    /// Compare two Besov seminorms of a trigonometric polynomial.
    Besov(BesovArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Selfadjoint,
    Unitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Fd,
    Monomial,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Lemmas,
    Kernels,
    Unitary,
    All,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[arg(long, value_enum, default_value = "selfadjoint")]
    pub mode: Mode,
    #[arg(long)]
    pub order: usize,
    #[arg(long)]
    pub function: String,
    /// Self-adjoint base point `A` (self-adjoint mode).
    #[arg(long)]
    pub matrix: Option<String>,
    /// Direction `K` (self-adjoint mode) or generator `A` (unitary mode).
    #[arg(long)]
    pub perturbation: String,
    /// Unitary base point `U` (unitary mode).
    #[arg(long)]
    pub unitary: Option<String>,
    #[arg(long, value_enum, default_value = "none")]
    pub check: Check,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Accepted for symmetry with `audit`; the derive checks are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BesovArgs {
    #[arg(long)]
    pub function: String,
    #[arg(long, default_value_t = 1)]
    pub degree: u32,
    #[arg(long, default_value_t = DEFAULT_SHARPNESS)]
    pub sharpness: f64,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let pool = match cli.threads {
        Some(0) => {
            let _ = writeln!(err, "error: --threads must be positive");
            return EXIT_INPUT;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start thread pool: {e}");
            return EXIT_INPUT;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Derive(a) => cmd_derive(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Besov(a) => cmd_besov(a),
    });
    match result {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn read_matrix(path: &str) -> Result<DenseOperator> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {path}: {e}")))?;
    parse_matrix(&text).map_err(|e| match e {
        Error::Parse {
            line,
            column,
            message,
        } => Error::Parse {
            line,
            column,
            message: format!("{path}: {message}"),
        },
        other => other,
    })
}

fn required<'a>(value: &'a Option<String>, flag: &str, mode: &str) -> Result<&'a str> {
    value
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required in {mode} mode")))
}

/// Runs `opint derive`; returns the report and the exit code.
pub fn cmd_derive(args: &DeriveArgs) -> Result<(String, i32)> {
    if !(args.tol >= 0.0) {
        return Err(Error::InvalidArgument("--tol must be nonnegative".into()));
    }
    let spec = parse_function_spec(&args.function)?;
    let k = read_matrix(&args.perturbation)?;
    let (mode, formula, oracle) = match (args.mode, &spec.function) {
        (Mode::Selfadjoint, Function::Line(phi)) => {
            let a = read_matrix(required(&args.matrix, "matrix", "selfadjoint")?)?;
            a.validate_hermitian()?;
            let formula = higher_derivative(phi, &a, &k, args.order)?;
            let oracle = match args.check {
                Check::Fd => Some(fd_oracle(
                    phi,
                    &a,
                    &k,
                    args.order,
                    default_step(args.order),
                )?),
                Check::Monomial => Some(polynomial_oracle(phi, &a, &k, args.order)?),
                Check::None => None,
            };
            ("selfadjoint", formula, oracle)
        }
        (Mode::Unitary, Function::Circle(phi)) => {
            let u = read_matrix(required(&args.unitary, "unitary", "unitary")?)?;
            let formula = stated_formula_unitary(phi, &u, &k, args.order)?;
            let oracle = match args.check {
                Check::Fd => Some(fd_oracle_unitary(
                    phi,
                    &u,
                    &k,
                    args.order,
                    default_step(args.order),
                )?),
                Check::Monomial => {
                    return Err(Error::InvalidArgument(
                        "the monomial check applies to self-adjoint mode only".into(),
                    ))
                }
                Check::None => None,
            };
            ("unitary", formula, oracle)
        }
        (Mode::Selfadjoint, Function::Circle(_)) => {
            return Err(Error::Domain(
                "self-adjoint mode needs a function on the line".into(),
            ))
        }
        (Mode::Unitary, Function::Line(_)) => {
            return Err(Error::Domain(
                "unitary mode needs a `fourier:` function on the circle".into(),
            ))
        }
    };
    let instance = format!("mode={mode} order={} function={}", args.order, spec.text);
    let check = oracle.map(|o| {
        let r = relative_residual(&formula, &o);
        let status = if r <= args.tol {
            Status::Pass
        } else {
            Status::Fail
        };
        let name = if args.check == Check::Fd {
            "fd"
        } else {
            "monomial"
        };
        AuditRow {
            check: name.into(),
            instance: instance.clone(),
            residual: r,
            bound: args.tol,
            status,
        }
    });
    let code = match &check {
        Some(row) if row.status == Status::Fail => EXIT_CHECK,
        _ => EXIT_OK,
    };
    let text = match args.format {
        Format::Text => {
            let mut s = format!("{instance}\n{}", serialize_matrix(&formula));
            if let Some(row) = &check {
                s.push_str(&format!(
                    "check {} residual={:.6e} bound={:.6e} {}\n",
                    row.check,
                    row.residual,
                    row.bound,
                    row.status.as_str()
                ));
            }
            s
        }
        Format::Jsonl => {
            let entries: Vec<Vec<[f64; 2]>> = (0..formula.dim())
                .map(|i| {
                    (0..formula.dim())
                        .map(|j| [formula.matrix()[(i, j)].re, formula.matrix()[(i, j)].im])
                        .collect()
                })
                .collect();
            let mut s = json!({
                "check": "formula",
                "instance": instance,
                "residual": 0.0,
                "bound": 0.0,
                "status": "computed",
                "operator": entries,
            })
            .to_string();
            s.push('\n');
            if let Some(row) = &check {
                s.push_str(&audit::render_jsonl(std::slice::from_ref(row)));
            }
            s
        }
    };
    Ok((text, code))
}

/// Runs `opint audit`; returns the report and the exit code.
pub fn cmd_audit(args: &AuditArgs) -> Result<(String, i32)> {
    let suite = match args.suite {
        SuiteArg::Lemmas => Suite::Lemmas,
        SuiteArg::Kernels => Suite::Kernels,
        SuiteArg::Unitary => Suite::Unitary,
        SuiteArg::All => Suite::All,
    };
    let rows = run_audit(&AuditOptions {
        suite,
        trials: args.trials,
        seed: args.seed,
    })?;
    let text = match args.format {
        Format::Text => audit::render_text(&rows),
        Format::Jsonl => audit::render_jsonl(&rows),
    };
    let code = if audit::failures(&rows) > 0 {
        EXIT_CHECK
    } else {
        EXIT_OK
    };
    Ok((text, code))
}

/// Runs `opint besov`; returns the report and the exit code.
pub fn cmd_besov(args: &BesovArgs) -> Result<(String, i32)> {
    let spec = parse_function_spec(&args.function)?;
    let Function::Circle(phi) = &spec.function else {
        return Err(Error::Domain(
            "besov needs a `fourier:` function on the circle".into(),
        ));
    };
    let win = make_window(args.sharpness)?;
    let lp = besov_seminorm_lp(phi, args.degree, &win);
    let diff = besov_seminorm_diff(phi, args.degree)?;
    let text = format!(
        "function {}\ndegree {}\nsharpness {}\nlp_seminorm {:.12e}\ndiff_seminorm {:.12e}\nratio {:.12e}\n",
        spec.text,
        args.degree,
        args.sharpness,
        lp,
        diff,
        diff / lp
    );
    Ok((text, EXIT_OK))
}
