//! Plain-text matrix formats.
//!
//! Sparse: a header line `rows cols nnz` followed by `nnz` lines `i j v`
//! with 1-based indices. Dense: one whitespace-delimited row per line.
//! Lines starting with `%` or `#` are comments. Values are written with the
//! shortest representation that round-trips exactly.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::CsrMatrix;
use crate::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(Error::from))
        .filter(|r| match r {
            Ok((_, l)) => {
                let t = l.trim();
                !(t.is_empty() || t.starts_with('%') || t.starts_with('#'))
            }
            Err(_) => true,
        })
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {tok:?}")))
}

pub fn read_coordinate<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let mut lines = content_lines(reader);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input, expected `rows cols nnz`"))??;
    let mut toks = header.split_whitespace();
    let rows: usize = parse_field(toks.next(), hline, "row count")?;
    let cols: usize = parse_field(toks.next(), hline, "column count")?;
    let nnz: usize = parse_field(toks.next(), hline, "nonzero count")?;
    let mut entries = Vec::with_capacity(nnz);
    for item in lines {
        let (ln, text) = item?;
        let mut toks = text.split_whitespace();
        let i: usize = parse_field(toks.next(), ln, "row index")?;
        let j: usize = parse_field(toks.next(), ln, "column index")?;
        let v: f64 = parse_field(toks.next(), ln, "value")?;
        if toks.next().is_some() {
            return Err(parse_err(ln, "trailing tokens"));
        }
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(parse_err(
                ln,
                format!("index ({i}, {j}) outside 1-based {rows}x{cols}"),
            ));
        }
        entries.push((i - 1, j - 1, v));
    }
    if entries.len() != nnz {
        return Err(parse_err(
            hline,
            format!("header declares {nnz} entries, found {}", entries.len()),
        ));
    }
    CsrMatrix::from_triplets(rows, cols, entries)
}

pub fn write_coordinate<W: Write>(mut w: W, a: &CsrMatrix) -> Result<()> {
    let (rows, cols) = a.shape();
    writeln!(w, "{rows} {cols} {}", a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {v:?}", i + 1, j + 1)?;
    }
    Ok(())
}

pub fn read_dense<R: BufRead>(reader: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for item in content_lines(reader) {
        let (ln, text) = item?;
        let row = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(ln, format!("cannot parse value from {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    ln,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_dense<W: Write>(mut w: W, a: &DMatrix<f64>) -> Result<()> {
    for i in 0..a.nrows() {
        let line: Vec<String> = a.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_coordinate_with_comments() {
        let text = "% matrix\n2 3 2\n1 1 0.5\n2 3 -4\n";
        let a = read_coordinate(text.as_bytes()).unwrap();
        assert_eq!(a.shape(), (2, 3));
        assert_eq!(a.to_dense()[(1, 2)], -4.0);
    }

    #[test]
    fn coordinate_errors_carry_line_numbers() {
        let err = read_coordinate("2 2 1\n3 1 1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = read_coordinate("2 2 2\n1 1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = read_coordinate("2 2 2\n1 1 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn ragged_dense_rejected() {
        let err = read_dense("1 2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    proptest! {
        #[test]
        fn dense_round_trip_is_exact(vals in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 12)) {
            let a = DMatrix::from_row_slice(3, 4, &vals);
            let mut buf = Vec::new();
            write_dense(&mut buf, &a).unwrap();
            let b = read_dense(buf.as_slice()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn coordinate_round_trip_is_exact(vals in prop::collection::vec(-1e300f64..1e300, 1..20)) {
            let entries: Vec<_> = vals.iter().enumerate().map(|(k, &v)| (k % 5, k / 5, v)).collect();
            let a = CsrMatrix::from_triplets(5, 4, entries).unwrap();
            let mut buf = Vec::new();
            write_coordinate(&mut buf, &a).unwrap();
            prop_assert_eq!(read_coordinate(buf.as_slice()).unwrap(), a);
        }
    }
}
