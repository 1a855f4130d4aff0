//! Text formats, dataset splitting and synthetic data for experiments.

mod checkpoint;
mod coo;
mod split;
mod synthetic;

pub use checkpoint::{parse_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use coo::{parse_coo_text, parse_queries, write_coo_text};
pub use split::{split_dataset, SplitSets, DEFAULT_SPLIT};
pub use synthetic::{generate_synthetic, inject_outliers, value_std, OutlierPlan};

/// Whitespace-separated tokens of a line with their 1-based columns, up to
/// the first `#`.
pub(crate) fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = match line.find('#') {
        Some(p) => &line[..p],
        None => line,
    };
    let mut rest = body;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let col = body[..offset + start].chars().count() + 1;
        let tok = &tail[..len];
        offset += start + len;
        rest = &tail[len..];
        Some((col, tok))
    })
}

#[cfg(test)]
mod tests {
    use super::tokens;

    #[test]
    fn tokenizer_columns() {
        let toks: Vec<_> = tokens("  dims 2  3 4 # trailing").collect();
        assert_eq!(toks, vec![(3, "dims"), (8, "2"), (11, "3"), (13, "4")]);
        assert_eq!(tokens("# only a comment").count(), 0);
        assert_eq!(tokens("").count(), 0);
    }
}
