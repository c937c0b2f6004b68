//! Header-free CSV: one sample per row, last column is the response.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linops::DesignMatrix;

pub fn parse_csv<R: Read>(input: R) -> Result<(DesignMatrix, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::Parse {
                line,
                msg: "need at least one feature and a response".into(),
            });
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {w} fields, got {}", rec.len()),
                })
            }
            _ => {}
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("bad number '{f}'"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let Some(w) = width else {
        return Err(Error::Parse {
            line: 0,
            msg: "no samples".into(),
        });
    };
    let n = w - 1;
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let b = rows.iter().map(|r| r[n]).collect();
    Ok((DesignMatrix::from_dense(a), b))
}

pub fn write_csv<W: Write>(w: &mut W, a: &DesignMatrix, b: &[f64]) -> Result<()> {
    check_len("write_csv", a.nrows(), b.len())?;
    let d = a.to_dense();
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..a.nrows() {
        let fields: Vec<String> = (0..a.ncols())
            .map(|j| format!("{:?}", d[(i, j)]))
            .chain(std::iter::once(format!("{:?}", b[i])))
            .collect();
        wr.write_record(&fields).map_err(|e| Error::Io(e.into()))?;
    }
    wr.flush()?;
    Ok(())
}
