//! Plain-text coordinate format.
//!
//! ```text
//! # comment
//! dims I J K
//! i j k value
//! ```
//!
//! Indices are 0-based. `#` starts a comment anywhere on a line and blank
//! lines are skipped. Values are written in shortest round-trip form, so
//! parsing written output reproduces every value bit for bit.

use std::fmt::Write as _;
use std::str::FromStr;

use super::tokens;
use crate::error::{LftError, Result};
use crate::tensor::{Dims, EntryIndex, SparseTensor};

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> LftError {
    LftError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn field<T: FromStr>(line: usize, tok: Option<(usize, &str)>, what: &str, eol_col: usize) -> Result<T> {
    let (col, s) = tok.ok_or_else(|| parse_err(line, eol_col, format!("missing {what}")))?;
    s.parse()
        .map_err(|_| parse_err(line, col, format!("invalid {what} `{s}`")))
}

fn parse_header(lineno: usize, line: &str) -> Result<Dims> {
    let eol = line.chars().count() + 1;
    let mut toks = tokens(line);
    match toks.next() {
        Some((_, "dims")) => {}
        Some((col, other)) => {
            return Err(parse_err(
                lineno,
                col,
                format!("expected `dims I J K` header, found `{other}`"),
            ))
        }
        None => unreachable!("blank lines are skipped"),
    }
    let i = field(lineno, toks.next(), "dimension I", eol)?;
    let j = field(lineno, toks.next(), "dimension J", eol)?;
    let k = field(lineno, toks.next(), "dimension K", eol)?;
    if let Some((col, extra)) = toks.next() {
        return Err(parse_err(lineno, col, format!("unexpected token `{extra}`")));
    }
    let dims = Dims::new(i, j, k);
    if !dims.is_valid() {
        return Err(parse_err(lineno, 1, format!("dimensions {dims} must all be positive")));
    }
    Ok(dims)
}

/// Parses a tensor; errors carry the 1-based line and column.
pub fn parse_coo_text(text: &str) -> Result<SparseTensor> {
    let mut dims = None;
    let mut entries = Vec::new();
    let mut lines_of = Vec::new();

    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let mut toks = tokens(line).peekable();
        if toks.peek().is_none() {
            continue;
        }
        let Some(dims) = dims else {
            dims = Some(parse_header(lineno, line)?);
            continue;
        };
        let eol = line.chars().count() + 1;
        let i_tok = toks.next();
        let j_tok = toks.next();
        let k_tok = toks.next();
        let idx = EntryIndex::new(
            field(lineno, i_tok, "index i", eol)?,
            field(lineno, j_tok, "index j", eol)?,
            field(lineno, k_tok, "index k", eol)?,
        );
        let v_tok = toks.next();
        let value: f64 = field(lineno, v_tok, "value", eol)?;
        if let Some((col, extra)) = toks.next() {
            return Err(parse_err(lineno, col, format!("unexpected token `{extra}`")));
        }
        if !dims.contains(idx) {
            let col = [(idx.i, dims.i, i_tok), (idx.j, dims.j, j_tok), (idx.k, dims.k, k_tok)]
                .into_iter()
                .find(|(v, d, _)| v >= d)
                .and_then(|(_, _, t)| t)
                .map_or(1, |(c, _)| c);
            return Err(parse_err(
                lineno,
                col,
                format!("index {idx} out of range for dims {dims}"),
            ));
        }
        if !value.is_finite() {
            let col = v_tok.map_or(1, |(c, _)| c);
            return Err(parse_err(lineno, col, format!("non-finite value {value}")));
        }
        entries.push((idx, value));
        lines_of.push(lineno);
    }

    let dims = dims.ok_or_else(|| parse_err(1, 1, "missing `dims I J K` header"))?;
    SparseTensor::new(dims, entries.iter().copied()).map_err(|e| match e {
        LftError::DuplicateIndex(idx) => {
            let line = entries
                .iter()
                .zip(&lines_of)
                .filter(|((i, _), _)| *i == idx)
                .nth(1)
                .map_or(0, |(_, l)| *l);
            parse_err(line, 1, format!("duplicate index {idx}"))
        }
        other => other,
    })
}

pub fn write_coo_text(t: &SparseTensor) -> String {
    let d = t.dims();
    let mut out = String::with_capacity(32 + t.len() * 24);
    writeln!(out, "dims {} {} {}", d.i, d.j, d.k).expect("writing to a String cannot fail");
    for (idx, v) in t.entries() {
        writeln!(out, "{} {} {} {}", idx.i, idx.j, idx.k, v).expect("writing to a String cannot fail");
    }
    out
}

/// Parses a list of `i j k` query indices, one per line, `#` comments allowed.
pub fn parse_queries(text: &str) -> Result<Vec<EntryIndex>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let eol = line.chars().count() + 1;
        let mut toks = tokens(line).peekable();
        if toks.peek().is_none() {
            continue;
        }
        let idx = EntryIndex::new(
            field(lineno, toks.next(), "index i", eol)?,
            field(lineno, toks.next(), "index j", eol)?,
            field(lineno, toks.next(), "index k", eol)?,
        );
        if let Some((col, extra)) = toks.next() {
            return Err(parse_err(lineno, col, format!("unexpected token `{extra}`")));
        }
        out.push(idx);
    }
    Ok(out)
}
