//! Plain-text file formats.
//!
//! | format        | header                                         | body                              |
//! |---------------|------------------------------------------------|-----------------------------------|
//! | tensor        | `ntd-t3 <J> <K> <L>`                           | `J·K·L` values, `l` fastest       |
//! | matrix        | `ntd-mat <rows> <cols>`                        | `rows·cols` values, row-major     |
//! | spectrogram   | `ntd-spec v1 <bands> <frames> <hop_seconds>`   | `bands·frames` values, row-major  |
//! | time list     | none                                           | one time in seconds per line      |
//! | loss trace    | none                                           | `<iteration> <loss>` per line     |
//!
//! Header fields and values are whitespace separated; line breaks inside the
//! body are not significant. Values are written in shortest round-trip
//! scientific notation, so a write/read cycle is lossless. Readers reject
//! NaN, infinities and negative values. Blank lines and lines starting with
//! `#` are ignored everywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ntd_core::{EvalReport, LossTrace, Matrix, Spectrogram, Tensor3};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TENSOR_MAGIC: &str = "ntd-t3";
pub const MATRIX_MAGIC: &str = "ntd-mat";
pub const SPECTROGRAM_MAGIC: &str = "ntd-spec";
pub const SPECTROGRAM_VERSION: &str = "v1";

struct Token<'a> {
    text: &'a str,
    line: usize,
}

struct Tokens<'a> {
    path: &'a Path,
    tokens: Vec<Token<'a>>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut last_line = 1;
        for (i, line) in text.lines().enumerate() {
            last_line = i + 1;
            if line.trim_start().starts_with('#') {
                continue;
            }
            tokens.extend(line.split_whitespace().map(|text| Token { text, line: i + 1 }));
        }
        Tokens {
            path,
            tokens,
            pos: 0,
            last_line,
        }
    }

    fn next(&mut self, what: &str) -> Result<&Token<'a>> {
        let tok = self.tokens.get(self.pos).ok_or_else(|| {
            CliError::parse(
                self.path,
                self.last_line,
                format!("unexpected end of file, expected {what}"),
            )
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, literal: &str) -> Result<()> {
        let path = self.path;
        let tok = self.next(literal)?;
        if tok.text != literal {
            return Err(CliError::parse(
                path,
                tok.line,
                format!("expected `{literal}`, found `{}`", tok.text),
            ));
        }
        Ok(())
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let path = self.path;
        let tok = self.next(what)?;
        match tok.text.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::parse(
                path,
                tok.line,
                format!("{what} must be a positive integer, found `{}`", tok.text),
            )),
        }
    }

    fn value(&mut self, what: &str) -> Result<f64> {
        let path = self.path;
        let tok = self.next(what)?;
        parse_value(path, tok.line, tok.text)
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.value("a value")).collect()
    }

    fn finish(&self) -> Result<()> {
        match self.tokens.get(self.pos) {
            Some(tok) => Err(CliError::parse(
                self.path,
                tok.line,
                format!("unexpected trailing value `{}`", tok.text),
            )),
            None => Ok(()),
        }
    }
}

fn parse_value(path: &Path, line: usize, text: &str) -> Result<f64> {
    let v: f64 = text
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("`{text}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::parse(path, line, format!("`{text}` is not finite")));
    }
    if v < 0.0 {
        return Err(CliError::parse(path, line, format!("negative value `{text}`")));
    }
    Ok(v)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn core_err(path: &Path, e: ntd_core::NtdError) -> CliError {
    CliError::parse(path, 1, e.to_string())
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:e}").unwrap();
    }
    out.push('\n');
}

pub fn tensor_to_string(t: &Tensor3) -> String {
    let [j, k, l] = t.dims();
    let mut out = format!("{TENSOR_MAGIC} {j} {k} {l}\n");
    for fibre in t.as_slice().chunks(l) {
        push_row(&mut out, fibre);
    }
    out
}

pub fn parse_tensor(path: &Path, text: &str) -> Result<Tensor3> {
    let mut toks = Tokens::new(path, text);
    toks.expect(TENSOR_MAGIC)?;
    let dims = [toks.dim("J")?, toks.dim("K")?, toks.dim("L")?];
    let data = toks.values(dims.iter().product())?;
    toks.finish()?;
    Tensor3::new(dims, data).map_err(|e| core_err(path, e))
}

pub fn read_tensor(path: &Path) -> Result<Tensor3> {
    parse_tensor(path, &read_text(path)?)
}

pub fn write_tensor(path: &Path, t: &Tensor3) -> Result<()> {
    write_text(path, &tensor_to_string(t))
}

pub fn matrix_to_string(m: &Matrix) -> String {
    let mut out = format!("{MATRIX_MAGIC} {} {}\n", m.rows(), m.cols());
    for r in 0..m.rows() {
        push_row(&mut out, m.row(r));
    }
    out
}

pub fn parse_matrix(path: &Path, text: &str) -> Result<Matrix> {
    let mut toks = Tokens::new(path, text);
    toks.expect(MATRIX_MAGIC)?;
    let (rows, cols) = (toks.dim("rows")?, toks.dim("cols")?);
    let data = toks.values(rows * cols)?;
    toks.finish()?;
    Matrix::new(rows, cols, data).map_err(|e| core_err(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(path, &read_text(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &matrix_to_string(m))
}

pub fn spectrogram_to_string(s: &Spectrogram) -> String {
    let mut out = format!(
        "{SPECTROGRAM_MAGIC} {SPECTROGRAM_VERSION} {} {} {:e}\n",
        s.bands(),
        s.frames(),
        s.hop_seconds()
    );
    for row in s.as_slice().chunks(s.frames()) {
        push_row(&mut out, row);
    }
    out
}

pub fn parse_spectrogram(path: &Path, text: &str) -> Result<Spectrogram> {
    let mut toks = Tokens::new(path, text);
    toks.expect(SPECTROGRAM_MAGIC)?;
    toks.expect(SPECTROGRAM_VERSION)?;
    let (bands, frames) = (toks.dim("bands")?, toks.dim("frames")?);
    let hop = toks.value("hop_seconds")?;
    if hop == 0.0 {
        return Err(CliError::parse(path, 1, "hop_seconds must be positive"));
    }
    let data = toks.values(bands * frames)?;
    toks.finish()?;
    Spectrogram::new(bands, frames, hop, data).map_err(|e| core_err(path, e))
}

pub fn read_spectrogram(path: &Path) -> Result<Spectrogram> {
    parse_spectrogram(path, &read_text(path)?)
}

pub fn write_spectrogram(path: &Path, s: &Spectrogram) -> Result<()> {
    write_text(path, &spectrogram_to_string(s))
}

/// One time per line, strictly increasing, nonnegative.
pub fn parse_times(path: &Path, text: &str) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let v = parse_value(path, i + 1, fields.next().unwrap())?;
        if let Some(extra) = fields.next() {
            return Err(CliError::parse(
                path,
                i + 1,
                format!("expected one time per line, found extra `{extra}`"),
            ));
        }
        if let Some(&prev) = out.last() {
            if !(v > prev) {
                return Err(CliError::parse(
                    path,
                    i + 1,
                    format!("times must be strictly increasing ({v} follows {prev})"),
                ));
            }
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_times(path: &Path) -> Result<Vec<f64>> {
    parse_times(path, &read_text(path)?)
}

pub fn times_to_string(times: &[f64]) -> String {
    times.iter().map(|t| format!("{t}\n")).collect()
}

pub fn write_times(path: &Path, times: &[f64]) -> Result<()> {
    write_text(path, &times_to_string(times))
}

pub fn loss_trace_to_string(trace: &LossTrace) -> String {
    trace
        .loss_iters
        .iter()
        .zip(&trace.losses)
        .map(|(it, loss)| format!("{it} {loss:e}\n"))
        .collect()
}

pub fn parse_loss_trace(path: &Path, text: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(CliError::parse(path, i + 1, "expected `<iteration> <loss>`"));
        }
        let it = fields[0]
            .parse()
            .map_err(|_| CliError::parse(path, i + 1, format!("bad iteration `{}`", fields[0])))?;
        out.push((it, parse_value(path, i + 1, fields[1])?));
    }
    Ok(out)
}

/// Machine-readable form of an [`EvalReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub tolerance: f64,
    pub hits: usize,
    pub est_count: usize,
    pub ref_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl From<&EvalReport> for EvalRecord {
    fn from(r: &EvalReport) -> Self {
        EvalRecord {
            precision: r.precision,
            recall: r.recall,
            f_measure: r.f_measure,
            tolerance: r.tolerance,
            hits: r.hits,
            est_count: r.est_count,
            ref_count: r.ref_count,
            warning: r.warning.map(|w| w.as_str().to_string()),
        }
    }
}

impl EvalRecord {
    /// Flat `key=value` record, one field per line.
    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "precision={}\nrecall={}\nf_measure={}\ntolerance={}\nhits={}\nest_count={}\nref_count={}\n",
            self.precision, self.recall, self.f_measure, self.tolerance, self.hits, self.est_count, self.ref_count
        );
        if let Some(w) = &self.warning {
            writeln!(out, "warning={w}").unwrap();
        }
        out
    }
}
