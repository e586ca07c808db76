use std::fmt::Write as _;
use std::path::Path;

use super::IoError;
use crate::dataset::{Class, Dataset};

/// Reads a dataset in the sparse `label index:value ...` format.
pub fn load_dataset(path: impl AsRef<Path>, b_const: f64) -> Result<Dataset, IoError> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, b_const)
}

/// Whitespace-separated tokens with their 1-based column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let skip = rest.len() - rest.trim_start().len();
        rest = &rest[skip..];
        offset += skip;
        if rest.is_empty() {
            return None;
        }
        let len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let tok = &rest[..len];
        let col = line[..offset].chars().count() + 1;
        rest = &rest[len..];
        offset += len;
        Some((col, tok))
    })
}

/// Parses the sparse text format. Blank lines are skipped; indices are
/// 1-based and strictly increasing within a line; missing entries are zero.
pub fn parse_dataset(text: &str, b_const: f64) -> Result<Dataset, IoError> {
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let err = |column: usize, message: String| IoError::Parse {
            line: ln + 1,
            column,
            message,
        };
        let mut toks = tokens(line);
        let Some((col, label)) = toks.next() else { continue };
        let positive = match label {
            "+1" | "1" => true,
            "-1" => false,
            _ => return Err(err(col, format!("label must be +1 or -1, got {label:?}"))),
        };
        let mut feats: Vec<f64> = Vec::new();
        for (col, tok) in toks {
            let Some((idx, val)) = tok.split_once(':') else {
                return Err(err(col, format!("expected index:value, got {tok:?}")));
            };
            let idx: usize = match idx.parse() {
                Ok(k) if k >= 1 => k,
                _ => return Err(err(col, format!("bad index {idx:?}"))),
            };
            if idx <= feats.len() {
                return Err(err(col, format!("index {idx} is not ascending")));
            }
            let val: f64 = match val.parse() {
                Ok(v) if f64::is_finite(v) => v,
                _ => return Err(err(col + idx.to_string().len() + 1, format!("bad value {val:?}"))),
            };
            feats.resize(idx - 1, 0.0);
            feats.push(val);
        }
        samples.push(feats);
        labels.push(positive);
    }
    if !labels.iter().any(|&l| l) {
        return Err(IoError::EmptyClass(Class::Positive));
    }
    if labels.iter().all(|&l| l) {
        return Err(IoError::EmptyClass(Class::Negative));
    }
    Ok(Dataset::from_samples(&samples, &labels, b_const))
}

/// Writes `data` back in input order. Zero entries are left out except the
/// last feature, which keeps the dimension.
pub fn write_dataset(data: &Dataset) -> String {
    let mut order = vec![0; data.n()];
    for (i, &p) in data.permutation().iter().enumerate() {
        order[p] = i;
    }
    let d = data.feature_dim_raw();
    let mut out = String::new();
    for i in order {
        let (feats, positive) = data.raw_sample(i);
        out.push_str(if positive { "+1" } else { "-1" });
        for (k, v) in feats.iter().enumerate() {
            if *v != 0.0 || k + 1 == d {
                let _ = write!(out, " {}:{}", k + 1, v);
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_and_augments() {
        let d = parse_dataset("-1 1:2.0\n+1 1:2.0\n", 0.01).unwrap();
        assert_eq!(d.n_plus(), 1);
        assert_eq!(d.column(0).as_slice(), &[2.0, 0.01]);
        assert_eq!(d.column(1).as_slice(), &[-2.0, -0.01]);
        assert_eq!(d.permutation(), &[1, 0]);
    }

    #[test]
    fn sparse_entries_default_to_zero() {
        let d = parse_dataset("+1 3:1.5\n\n-1 1:-1 2:4e-1\n", 0.5).unwrap();
        assert_eq!(d.feature_dim_raw(), 3);
        assert_eq!(d.column(0).as_slice(), &[0.0, 0.0, 1.5, 0.5]);
        assert_eq!(d.column(1).as_slice(), &[1.0, -0.4, 0.0, -0.5]);
    }

    #[test]
    fn reports_position_of_errors() {
        let e = parse_dataset("+1 1:2\n-1 2:1 1:3\n", 0.01).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, column: 8, .. }), "{e}");
        let e = parse_dataset("+1 1:2\n 0 1:1\n", 0.01).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, column: 2, .. }), "{e}");
        let e = parse_dataset("+1 1:x\n", 0.01).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 1, column: 6, .. }), "{e}");
        let e = parse_dataset("+1 0:1\n", 0.01).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 1, column: 4, .. }), "{e}");
        let e = parse_dataset("+1 1\n", 0.01).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 1, column: 4, .. }), "{e}");
    }

    #[test]
    fn needs_both_classes() {
        assert!(matches!(parse_dataset("+1 1:1\n+1 1:2\n", 0.01), Err(IoError::EmptyClass(Class::Negative))));
        assert!(matches!(parse_dataset("-1 1:1\n", 0.01), Err(IoError::EmptyClass(Class::Positive))));
        assert!(matches!(parse_dataset("", 0.01), Err(IoError::EmptyClass(Class::Positive))));
    }

    #[test]
    fn rewrite_is_idempotent() {
        let text = "-1 2:0.1\n+1 1:3 2:-0.30000000000000004\n-1 1:1e-300 2:0\n";
        let a = parse_dataset(text, 0.01).unwrap();
        let written = write_dataset(&a);
        let b = parse_dataset(&written, 0.01).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.permutation(), b.permutation());
        assert_eq!(write_dataset(&b), written);
    }
}
