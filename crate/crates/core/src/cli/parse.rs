//! Matrix files and function specs.

use num_complex::Complex64;

use crate::scalar_functions::{CircleFunction, Function, ScalarFunction};
use crate::spectral::DenseOperator;
use crate::{Error, Result};

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens of a line with their 1-based columns, comments
/// stripped.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &body[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &body[s..]));
    }
    out
}

/// Parses
///
/// ```text
/// matrix <rows> <cols> complex
/// re im re im ...
/// ```
///
/// `#` starts a comment and blank lines are ignored. Row breaks in the body
/// are not significant; only the total count of numbers is.
pub fn parse_matrix(text: &str) -> Result<DenseOperator> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, tokens(l)))
        .filter(|(_, t)| !t.is_empty());
    let Some((hline, header)) = lines.next() else {
        return Err(parse_error(
            1,
            1,
            "missing header `matrix <rows> <cols> complex`",
        ));
    };
    let head_word = header[0];
    if head_word.1 != "matrix" {
        return Err(parse_error(
            hline,
            head_word.0,
            format!("expected `matrix`, found `{}`", head_word.1),
        ));
    }
    if header.len() != 4 {
        let col = header.last().map(|t| t.0).unwrap_or(1);
        return Err(parse_error(
            hline,
            col,
            format!("header needs 4 fields, found {}", header.len()),
        ));
    }
    let dim = |(col, tok): (usize, &str)| -> Result<usize> {
        match tok.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(parse_error(
                hline,
                col,
                format!("expected a positive dimension, found `{tok}`"),
            )),
        }
    };
    let rows = dim(header[1])?;
    let cols = dim(header[2])?;
    if header[3].1 != "complex" {
        return Err(parse_error(
            hline,
            header[3].0,
            format!("expected `complex`, found `{}`", header[3].1),
        ));
    }
    if rows != cols {
        return Err(parse_error(
            hline,
            header[2].0,
            format!("matrix must be square, got {rows}x{cols}"),
        ));
    }
    let expected = 2 * rows * cols;
    let mut values = Vec::with_capacity(expected);
    let mut last = (hline, 1);
    for (line, toks) in lines {
        for (col, tok) in toks {
            if values.len() == expected {
                return Err(parse_error(
                    line,
                    col,
                    format!("too many numbers: expected {expected}"),
                ));
            }
            let v: f64 = tok
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_error(line, col, format!("not a finite number: `{tok}`")))?;
            values.push(v);
            last = (line, col + tok.len());
        }
    }
    if values.len() != expected {
        return Err(parse_error(
            last.0,
            last.1,
            format!(
                "expected {expected} numbers ({rows}x{cols} complex entries), found {}",
                values.len()
            ),
        ));
    }
    let entries: Vec<Complex64> = values
        .chunks(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    DenseOperator::from_row_major(rows, &entries)
}

/// Inverse of [`parse_matrix`]; one matrix row per line, shortest round-trip
/// decimal floats.
pub fn serialize_matrix(op: &DenseOperator) -> String {
    let m = op.matrix();
    let mut out = format!("matrix {} {} complex\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{} {}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// A parsed function together with the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub text: String,
    pub function: Function,
}

fn number(text: &str, tok: &str, offset: usize) -> Result<f64> {
    let trimmed = tok.trim();
    let lead = tok.len() - tok.trim_start().len();
    trimmed
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            parse_error(
                1,
                offset + lead + 1,
                format!("malformed number `{trimmed}` in `{text}`"),
            )
        })
}

/// Grammar: `poly:c0,c1,...` | `exp[:rate]` | `sin[:rate]` | `cos[:rate]` |
/// `fourier:n1=re,im;n2=re,im;...`. Errors report the 1-based column.
pub fn parse_function_spec(text: &str) -> Result<FunctionSpec> {
    let (head, rest) = match text.find(':') {
        Some(i) => (&text[..i], Some((i + 1, &text[i + 1..]))),
        None => (text, None),
    };
    let function = match head {
        "exp" | "sin" | "cos" => {
            let rate = match rest {
                None => 1.0,
                Some((off, r)) => number(text, r, off)?,
            };
            Function::Line(match head {
                "exp" => ScalarFunction::Exp(rate),
                "sin" => ScalarFunction::Sin(rate),
                _ => ScalarFunction::Cos(rate),
            })
        }
        "poly" => {
            let (mut off, body) = rest.ok_or_else(|| {
                parse_error(
                    1,
                    text.len() + 1,
                    "`poly` needs coefficients `poly:c0,c1,...`",
                )
            })?;
            let mut coeffs = Vec::new();
            for part in body.split(',') {
                coeffs.push(number(text, part, off)?);
                off += part.len() + 1;
            }
            Function::Line(ScalarFunction::Polynomial(coeffs))
        }
        "fourier" => {
            let (mut off, body) = rest.ok_or_else(|| {
                parse_error(
                    1,
                    text.len() + 1,
                    "`fourier` needs terms `fourier:n=re,im;...`",
                )
            })?;
            let mut terms = Vec::new();
            for part in body.split(';') {
                let eq = part.find('=').ok_or_else(|| {
                    parse_error(1, off + 1, format!("expected `n=re,im`, found `{part}`"))
                })?;
                let idx = part[..eq].trim();
                let n: i64 = idx
                    .parse()
                    .map_err(|_| parse_error(1, off + 1, format!("malformed frequency `{idx}`")))?;
                let value = &part[eq + 1..];
                let comma = value.find(',').ok_or_else(|| {
                    parse_error(
                        1,
                        off + eq + 2,
                        format!("expected `re,im`, found `{value}`"),
                    )
                })?;
                let re = number(text, &value[..comma], off + eq + 1)?;
                let im = number(text, &value[comma + 1..], off + eq + 2 + comma)?;
                terms.push((n, Complex64::new(re, im)));
                off += part.len() + 1;
            }
            let mut seen = std::collections::BTreeSet::new();
            if let Some((n, _)) = terms.iter().find(|(n, _)| !seen.insert(*n)) {
                return Err(parse_error(1, 1, format!("frequency {n} given twice")));
            }
            Function::Circle(CircleFunction::new(terms))
        }
        _ => return Err(parse_error(1, 1, format!("unknown function head `{head}`"))),
    };
    Ok(FunctionSpec {
        text: text.to_string(),
        function,
    })
}
