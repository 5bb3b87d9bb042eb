//! Plain-text matrix files.
//!
//! Tower matrices use the `DYADIC-MATRIX v1` format:
//!
//! ```text
//! DYADIC-MATRIX v1
//! level <k>
//! <N lines of N whitespace-separated tokens re,im>
//! ```
//!
//! Arbitrary square matrices use the identical `GENERAL-MATRIX v1` variant
//! whose second line reads `dim <N>`. Writers print full round-trip decimal;
//! readers accept any decimal the float parser takes.

use num_complex::Complex64;

use crate::dense::GeneralMatrix;
use crate::error::{Error, Result};
use crate::tower::{CMatrix, Level};

pub const DYADIC_HEADER: &str = "DYADIC-MATRIX v1";
pub const GENERAL_HEADER: &str = "GENERAL-MATRIX v1";

fn push_rows(out: &mut String, n: usize, get: impl Fn(usize, usize) -> Complex64) {
    for i in 1..=n {
        for j in 1..=n {
            if j > 1 {
                out.push(' ');
            }
            let v = get(i, j);
            out.push_str(&format!("{},{}", v.re, v.im));
        }
        out.push('\n');
    }
}

pub fn format_cmatrix(m: &CMatrix) -> String {
    let n = m.dim();
    let mut out = format!("{DYADIC_HEADER}\nlevel {}\n", m.level().k());
    push_rows(&mut out, n, |i, j| *m.get(i, j));
    out
}

pub fn format_general(m: &GeneralMatrix) -> String {
    let n = m.dim();
    let mut out = format!("{GENERAL_HEADER}\ndim {n}\n");
    push_rows(&mut out, n, |i, j| m.get(i, j));
    out
}

/// Formats with the dyadic header when the side is a power of two, the
/// general variant otherwise.
pub fn format_auto(m: &GeneralMatrix) -> String {
    match m.to_cmatrix() {
        Ok(c) => format_cmatrix(&c),
        Err(_) => format_general(m),
    }
}

/// A parsed matrix file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedMatrix {
    Dyadic(CMatrix),
    General(GeneralMatrix),
}

impl LoadedMatrix {
    pub fn dim(&self) -> usize {
        match self {
            LoadedMatrix::Dyadic(m) => m.dim(),
            LoadedMatrix::General(m) => m.dim(),
        }
    }

    pub fn into_cmatrix(self) -> Result<CMatrix> {
        match self {
            LoadedMatrix::Dyadic(m) => Ok(m),
            LoadedMatrix::General(m) => m.to_cmatrix(),
        }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedMatrixFile {
        line,
        message: message.into(),
    }
}

fn parse_token(tok: &str, line: usize) -> Result<Complex64> {
    let (re, im) = tok
        .split_once(',')
        .ok_or_else(|| bad(line, format!("token `{tok}` is not of the form re,im")))?;
    let re: f64 = re
        .parse()
        .map_err(|_| bad(line, format!("bad real part `{re}`")))?;
    let im: f64 = im
        .parse()
        .map_err(|_| bad(line, format!("bad imaginary part `{im}`")))?;
    Ok(Complex64::new(re, im))
}

pub fn parse_matrix(text: &str) -> Result<LoadedMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let dyadic = match header.trim_end() {
        DYADIC_HEADER => true,
        GENERAL_HEADER => false,
        other => return Err(bad(1, format!("unknown header `{other}`"))),
    };

    let (_, size_line) = lines.next().ok_or_else(|| bad(2, "missing size line"))?;
    let mut parts = size_line.split_whitespace();
    let key = parts.next().unwrap_or("");
    let value = parts.next().unwrap_or("");
    let n: usize = if dyadic {
        if key != "level" {
            return Err(bad(2, "expected `level <k>`"));
        }
        let k: u32 = value
            .parse()
            .map_err(|_| bad(2, format!("bad level `{value}`")))?;
        Level::new(k).map_err(|e| bad(2, e.to_string()))?.dim()
    } else {
        if key != "dim" {
            return Err(bad(2, "expected `dim <N>`"));
        }
        let n: usize = value
            .parse()
            .map_err(|_| bad(2, format!("bad dimension `{value}`")))?;
        if n == 0 {
            return Err(bad(2, "dimension must be positive"));
        }
        n
    };

    let mut entries: Vec<Complex64> = Vec::with_capacity(n * n);
    for row in 0..n {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| bad(3 + row, format!("missing row {}", row + 1)))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != n {
            return Err(bad(
                idx + 1,
                format!("expected {n} entries, found {}", tokens.len()),
            ));
        }
        for tok in tokens {
            entries.push(parse_token(tok, idx + 1)?);
        }
    }

    if dyadic {
        let level = Level::new((n as u64).trailing_zeros())?;
        let mut m = CMatrix::zeros(level);
        for i in 0..n {
            for j in 0..n {
                m.set(i + 1, j + 1, entries[i * n + j]);
            }
        }
        Ok(LoadedMatrix::Dyadic(m))
    } else {
        let mut m = GeneralMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i + 1, j + 1, entries[i * n + j]);
            }
        }
        Ok(LoadedMatrix::General(m))
    }
}

pub fn read_matrix_file(path: &std::path::Path) -> Result<LoadedMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text)
}
