//! LIBSVM text format: `<label> <index>:<value> ...`, 1-based indices
//! strictly increasing within a line.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linops::{CscMatrix, DesignMatrix, Storage};

/// Parses LIBSVM data from raw bytes. Blank lines and `#` comments are
/// skipped; every other problem is reported with its 1-based line number.
pub fn parse_libsvm(input: &[u8]) -> Result<(DesignMatrix, Vec<f64>)> {
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut n = 0usize;
    for (lineno, raw) in input.split(|&c| c == b'\n').enumerate() {
        let line_no = lineno + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let text = std::str::from_utf8(raw).map_err(|_| err("invalid UTF-8".into()))?;
        let text = text.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut tokens = text.split_ascii_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label = parse_finite(label_tok).ok_or_else(|| err(format!("bad label '{label_tok}'")))?;
        let row = labels.len();
        labels.push(label);
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad index '{idx}'")))?;
            if idx == 0 {
                return Err(err("indices are 1-based".into()));
            }
            if idx <= last {
                return Err(err(format!("index {idx} does not increase (previous {last})")));
            }
            last = idx;
            let v = parse_finite(val).ok_or_else(|| err(format!("bad value '{val}'")))?;
            n = n.max(idx);
            if v != 0.0 {
                triplets.push((row, idx - 1, v));
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no samples".into(),
        });
    }
    let csc = CscMatrix::from_triplets(labels.len(), n, &triplets)?;
    Ok((DesignMatrix::from_csc(csc), labels))
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes `(A, b)` with shortest round-trip float formatting. Explicit zeros
/// are omitted, except that the last column is always present so the column
/// count survives a round trip.
pub fn write_libsvm<W: Write>(w: &mut W, a: &DesignMatrix, b: &[f64]) -> Result<()> {
    crate::error::check_len("write_libsvm", a.nrows(), b.len())?;
    let (m, n) = (a.nrows(), a.ncols());
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    match a.storage() {
        Storage::Dense(d) => {
            for (i, row) in rows.iter_mut().enumerate() {
                for j in 0..n {
                    if d[(i, j)] != 0.0 {
                        row.push((j, d[(i, j)]));
                    }
                }
            }
        }
        Storage::Sparse(s) => {
            for j in 0..n {
                let (ri, vals) = s.column(j);
                for (&i, &v) in ri.iter().zip(vals) {
                    if v != 0.0 {
                        rows[i].push((j, v));
                    }
                }
            }
        }
    }
    if n > 0 && m > 0 && !rows.iter().any(|r| r.last().is_some_and(|&(j, _)| j == n - 1)) {
        rows[0].push((n - 1, 0.0));
    }
    for (row, label) in rows.iter().zip(b) {
        write!(w, "{label:?}")?;
        for (j, v) in row {
            write!(w, " {}:{v:?}", j + 1)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
