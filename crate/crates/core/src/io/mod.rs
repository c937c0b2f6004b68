//! Data ingestion, synthetic problems, solution vectors and JSON reports.

mod dense;
mod libsvm;
mod report;
mod synth;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use dense::{parse_csv, write_csv};
pub use libsvm::{parse_libsvm, write_libsvm};
pub use report::{emit_report, LevelSetSummary, ReportDocument, RunRecord, REPORT_SCHEMA, SCHEMA_VERSION};
pub use synth::{generate_synthetic, SyntheticProblem, SyntheticSpec};

use crate::error::{Error, Result};
use crate::linops::DesignMatrix;
use crate::vecops::norm_inf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Libsvm,
    Csv,
}

impl DataFormat {
    /// `.csv` means CSV, anything else LIBSVM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Libsvm,
        }
    }
}

/// Reads `(A, b)` from a file.
pub fn read_data(path: &Path, format: DataFormat) -> Result<(DesignMatrix, Vec<f64>)> {
    let bytes = fs::read(path)?;
    match format {
        DataFormat::Libsvm => parse_libsvm(&bytes),
        DataFormat::Csv => parse_csv(&bytes[..]),
    }
}

pub fn write_data(path: &Path, format: DataFormat, a: &DesignMatrix, b: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    match format {
        DataFormat::Libsvm => write_libsvm(&mut f, a, b)?,
        DataFormat::Csv => write_csv(&mut f, a, b)?,
    }
    f.flush()?;
    Ok(())
}

/// Scales every column of norm above one to unit norm. Returns the scaled
/// matrix and the factors `s` with `A' = A·Diag(s)`, so a solution `x'` of the
/// scaled problem maps back as `x = s ⊙ x'`.
pub fn normalize_columns(a: &DesignMatrix) -> (DesignMatrix, Vec<f64>) {
    let scales: Vec<f64> = (0..a.ncols())
        .map(|j| {
            let nrm = a.column_norm(j);
            if nrm > 1.0 {
                1.0 / nrm
            } else {
                1.0
            }
        })
        .collect();
    let scaled = a.scale_columns(&scales).expect("one scale per column");
    (scaled, scales)
}

/// `λ₁ = α₁‖Aᵀb‖∞`, `λ₂ = α₂λ₁`.
pub fn lambda_from_alphas(a: &DesignMatrix, b: &[f64], alpha1: f64, alpha2: f64) -> Result<(f64, f64)> {
    if !(alpha1 > 0.0 && alpha1 < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha1 must lie in (0, 1), got {alpha1}")));
    }
    if !(alpha2 > 0.0 && alpha2.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha2 must be positive, got {alpha2}")));
    }
    let atb = a.rmat_vec(b)?;
    let lambda1 = alpha1 * norm_inf(&atb);
    Ok((lambda1, alpha2 * lambda1))
}

/// One value per line with 17 significant digits.
pub fn write_solution(path: &Path, x: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_solution_to(&mut f, x)?;
    f.flush()?;
    Ok(())
}

pub fn write_solution_to<W: Write>(w: &mut W, x: &[f64]) -> Result<()> {
    for v in x {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

/// Inverse of [`write_solution`]; blank lines and `#` comments are skipped.
pub fn parse_solution(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("not a number: '{t}'"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "non-finite value".into(),
            });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_solution(path: &Path) -> Result<Vec<f64>> {
    parse_solution(&fs::read_to_string(path)?)
}
