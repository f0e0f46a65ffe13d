//! Plain-text matrix files.
//!
//! The first line holds `rows cols`; each following line holds one row of
//! whitespace-separated decimal values. A `nan` entry marks an unobserved
//! value: it loads as `0.0` and is left out of the returned mask.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dense::{DenseMatrix, ObservationMask};
use crate::error::{Error, Result};

fn parse_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        offset,
        message: message.into(),
    })
}

/// Whitespace-separated tokens with their byte offsets.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_ascii_whitespace()
        .map(move |tok| (tok.as_ptr() as usize - text.as_ptr() as usize, tok))
}

/// Parses the text format, returning the data (missing entries zeroed) and
/// the observed set.
pub fn parse_matrix(text: &str) -> Result<(DenseMatrix, ObservationMask)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let dims: Vec<&str> = header.split_ascii_whitespace().collect();
    if dims.len() != 2 {
        return parse_err(0, "header must be `rows cols`");
    }
    let rows: usize = dims[0]
        .parse()
        .or_else(|_| parse_err(0, format!("bad row count `{}`", dims[0])))?;
    let cols: usize = dims[1]
        .parse()
        .or_else(|_| parse_err(0, format!("bad column count `{}`", dims[1])))?;
    if rows == 0 || cols == 0 {
        return parse_err(0, "matrix dimensions must be positive");
    }

    let body_start = header.len().min(text.len());
    let body = &text[body_start..];
    let mut data = Vec::with_capacity(rows * cols);
    let mut flags = Vec::with_capacity(rows * cols);
    let mut last_offset = body_start;
    for (off, tok) in tokens(body) {
        let offset = body_start + off;
        last_offset = offset;
        if data.len() == rows * cols {
            return parse_err(offset, "more values than `rows * cols`");
        }
        if tok.eq_ignore_ascii_case("nan") {
            data.push(0.0);
            flags.push(false);
            continue;
        }
        let v: f64 = match tok.parse() {
            Ok(v) => v,
            Err(_) => return parse_err(offset, format!("not a number: `{tok}`")),
        };
        if !v.is_finite() {
            return parse_err(offset, format!("non-finite value `{tok}`"));
        }
        data.push(v);
        flags.push(true);
    }
    if data.len() != rows * cols {
        return parse_err(
            last_offset,
            format!("expected {} values, found {}", rows * cols, data.len()),
        );
    }
    let mask = ObservationMask::from_flags(rows, cols, &flags)?;
    Ok((DenseMatrix::from_vec(rows, cols, data)?, mask))
}

/// Formats `a`; entries outside `mask` (when given) are written as `nan`.
pub fn format_matrix(a: &DenseMatrix, mask: Option<&ObservationMask>) -> String {
    let mut out = String::with_capacity(a.len() * 12);
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            match mask {
                Some(m) if !m.contains(i, j) => out.push_str("nan"),
                _ => {
                    let _ = write!(out, "{v}");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<(DenseMatrix, ObservationMask)> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(
    path: impl AsRef<Path>,
    a: &DenseMatrix,
    mask: Option<&ObservationMask>,
) -> Result<()> {
    fs::write(path, format_matrix(a, mask))?;
    Ok(())
}

/// Reads a mask file in the same text format: nonzero entries are observed,
/// zero or `nan` entries are not.
pub fn read_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    let (values, present) = read_matrix(path)?;
    let flags: Vec<bool> = values
        .as_slice()
        .iter()
        .enumerate()
        .map(|(p, &v)| present.contains_linear(p) && v != 0.0)
        .collect();
    ObservationMask::from_flags(values.rows(), values.cols(), &flags)
}

pub fn format_mask(mask: &ObservationMask) -> String {
    let ones = DenseMatrix::from_fn(mask.rows(), mask.cols(), |i, j| {
        if mask.contains(i, j) {
            1.0
        } else {
            0.0
        }
    });
    format_matrix(&ones, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nan_entries_become_unobserved() {
        let (a, mask) = parse_matrix("2 3\n1 nan 3\n-4.5 5e-1 NaN\n").unwrap();
        assert_eq!(a.shape(), (2, 3));
        assert_eq!(a[(0, 1)], 0.0);
        assert_eq!(a[(1, 1)], 0.5);
        assert_eq!(mask.count(), 4);
        assert!(!mask.contains(0, 1) && !mask.contains(1, 2));
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_matrix("1 2\n1 x\n") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_matrix("2 2\n1 2 3\n").is_err());
        assert!(parse_matrix("2 2\n1 2 3 4 5\n").is_err());
        assert!(parse_matrix("two 2\n").is_err());
        assert!(parse_matrix("1 1\ninf\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 12), hide in 0usize..12) {
            let a = DenseMatrix::from_vec(3, 4, values).unwrap();
            let mut flags = vec![true; 12];
            flags[hide] = false;
            let mask = ObservationMask::from_flags(3, 4, &flags).unwrap();
            let (b, m) = parse_matrix(&format_matrix(&a, Some(&mask))).unwrap();
            prop_assert_eq!(&m, &mask);
            prop_assert_eq!(b, mask.project(&a).unwrap());
        }
    }
}
