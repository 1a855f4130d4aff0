//! Model checkpoints.
//!
//! ```text
//! LFT v1 dimI dimJ dimK R
//! <dimI lines of R values: U>
//! <dimJ lines of R values: S>
//! <dimK lines of R values: T>
//! ```

use std::fmt::Write as _;

use super::tokens;
use crate::error::{LftError, Result};
use crate::model::{FactorMatrix, FactorModel};

pub const CHECKPOINT_MAGIC: &str = "LFT v1";

fn err(line: usize, column: usize, message: impl Into<String>) -> LftError {
    LftError::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn write_checkpoint(m: &FactorModel) -> String {
    let d = m.dims();
    let rank = m.rank();
    let mut out = String::with_capacity((d.i + d.j + d.k) * rank * 22 + 32);
    writeln!(out, "{CHECKPOINT_MAGIC} {} {} {} {rank}", d.i, d.j, d.k).unwrap();
    for mat in [m.u(), m.s(), m.t()] {
        for r in 0..mat.rows() {
            let row = mat.row(r);
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    out.push(' ');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_checkpoint(text: &str) -> Result<FactorModel> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, 1, "empty checkpoint"))?;
    let rest = header
        .strip_prefix(CHECKPOINT_MAGIC)
        .ok_or_else(|| err(1, 1, format!("expected `{CHECKPOINT_MAGIC}` header")))?;
    let offset = CHECKPOINT_MAGIC.len();
    let mut nums = Vec::with_capacity(4);
    for (col, tok) in tokens(rest) {
        let v: usize = tok
            .parse()
            .map_err(|_| err(1, col + offset, format!("invalid header field `{tok}`")))?;
        nums.push(v);
    }
    let [di, dj, dk, rank] = nums[..] else {
        return Err(err(1, 1, "header must be `LFT v1 dimI dimJ dimK R`"));
    };
    if rank == 0 {
        return Err(err(1, 1, "rank must be at least 1"));
    }

    let mut read_matrix = |rows: usize| -> Result<FactorMatrix> {
        let mut data = Vec::with_capacity(rows * rank);
        for _ in 0..rows {
            let (n, line) = lines
                .next()
                .ok_or_else(|| err(text.lines().count() + 1, 1, "unexpected end of checkpoint"))?;
            let before = data.len();
            for (col, tok) in tokens(line) {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| err(n + 1, col, format!("invalid value `{tok}`")))?;
                if !v.is_finite() {
                    return Err(err(n + 1, col, format!("non-finite value `{tok}`")));
                }
                data.push(v);
            }
            if data.len() - before != rank {
                return Err(err(
                    n + 1,
                    1,
                    format!("expected {rank} values, found {}", data.len() - before),
                ));
            }
        }
        FactorMatrix::from_vec(rows, rank, data)
    };
    let u = read_matrix(di)?;
    let s = read_matrix(dj)?;
    let t = read_matrix(dk)?;
    if let Some((n, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(n + 1, 1, format!("trailing content `{}`", line.trim())));
    }
    FactorModel::from_factors(u, s, t)
}
