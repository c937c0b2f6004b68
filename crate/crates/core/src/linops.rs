//! Linear operators: the forward-difference operator `B` and products with the
//! design matrix `A`, stored either dense (column-major) or compressed by column.
//!
//! `B` maps `x ∈ ℝⁿ` to `(x₀ − x₁, …, x_{n−2} − x_{n−1}) ∈ ℝⁿ⁻¹` and is never
//! materialized.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// Forward differences `(Bx)_i = x_i − x_{i+1}`. Returns an empty vector for `n ≤ 1`.
pub fn apply_b(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[0] - w[1]).collect()
}

/// Adjoint of [`apply_b`]: maps `z ∈ ℝⁿ⁻¹` to `Bᵀz ∈ ℝⁿ`.
pub fn apply_bt(z: &[f64], n: usize) -> Result<Vec<f64>> {
    check_len("apply_bt", n.saturating_sub(1), z.len())?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut out = vec![0.0; n];
    apply_bt_into(z, &mut out);
    Ok(out)
}

pub(crate) fn apply_bt_into(z: &[f64], out: &mut [f64]) {
    let n = out.len();
    debug_assert_eq!(z.len() + 1, n.max(1));
    if n == 0 {
        return;
    }
    if n == 1 {
        out[0] = 0.0;
        return;
    }
    out[0] = z[0];
    for i in 1..n - 1 {
        out[i] = z[i] - z[i - 1];
    }
    out[n - 1] = -z[n - 2];
}

/// The `(n−1)×n` difference operator as a value, for callers that prefer an
/// operator object over the free functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOperator {
    n: usize,
}

impl DiffOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("DiffOperator::apply", self.n, x.len())?;
        Ok(apply_b(x))
    }

    pub fn apply_transpose(&self, z: &[f64]) -> Result<Vec<f64>> {
        apply_bt(z, self.n)
    }
}

/// Compressed sparse column storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != ncols + 1 {
            return Err(Error::MalformedMatrix(format!(
                "column offsets have length {}, expected {}",
                col_ptr.len(),
                ncols + 1
            )));
        }
        if col_ptr[0] != 0 || col_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::MalformedMatrix(
                "column offsets must start at 0 and be nondecreasing".into(),
            ));
        }
        let nnz = col_ptr[ncols];
        if row_idx.len() != nnz || values.len() != nnz {
            return Err(Error::MalformedMatrix(format!(
                "expected {nnz} stored entries, got {} row indices and {} values",
                row_idx.len(),
                values.len()
            )));
        }
        if let Some(&bad) = row_idx.iter().find(|&&r| r >= nrows) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                dim: nrows,
            });
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= nrows {
                return Err(Error::IndexOutOfRange { index: r, dim: nrows });
            }
            if c >= ncols {
                return Err(Error::IndexOutOfRange { index: c, dim: ncols });
            }
        }
        sorted.sort_by_key(|t| (t.1, t.0));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
            last = Some((r, c));
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::new(nrows, ncols, col_ptr, row_idx, values)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[s..e], &self.values[s..e])
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(DMatrix<f64>),
    Sparse(CscMatrix),
}

/// The `m×n` design matrix `A`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    m: usize,
    n: usize,
    storage: Storage,
}

impl DesignMatrix {
    pub fn from_dense(a: DMatrix<f64>) -> Self {
        Self {
            m: a.nrows(),
            n: a.ncols(),
            storage: Storage::Dense(a),
        }
    }

    /// Dense matrix from row slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        for r in rows {
            check_len("DesignMatrix::from_rows", n, r.len())?;
        }
        Ok(Self::from_dense(DMatrix::from_fn(m, n, |i, j| rows[i][j])))
    }

    pub fn from_csc(a: CscMatrix) -> Self {
        Self {
            m: a.nrows,
            n: a.ncols,
            storage: Storage::Sparse(a),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dense(DMatrix::identity(n, n))
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Stored entries (all `m·n` entries for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(_) => self.m * self.n,
            Storage::Sparse(s) => s.nnz(),
        }
    }

    pub fn density(&self) -> f64 {
        if self.m == 0 || self.n == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.m as f64 * self.n as f64)
    }

    /// Same matrix in the other storage scheme (dense → sparse drops exact zeros).
    pub fn to_sparse(&self) -> Self {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense(d) => {
                let mut trip = Vec::new();
                for j in 0..self.n {
                    for i in 0..self.m {
                        let v = d[(i, j)];
                        if v != 0.0 {
                            trip.push((i, j, v));
                        }
                    }
                }
                Self::from_csc(CscMatrix::from_triplets(self.m, self.n, &trip).expect("valid"))
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Sparse(s) => {
                let mut d = DMatrix::zeros(self.m, self.n);
                for j in 0..self.n {
                    let (rows, vals) = s.column(j);
                    for (&r, &v) in rows.iter().zip(vals) {
                        d[(r, j)] += v;
                    }
                }
                d
            }
        }
    }

    /// `out += alpha * A[:, j]`
    #[inline]
    pub(crate) fn col_axpy(&self, j: usize, alpha: f64, out: &mut [f64]) {
        match &self.storage {
            Storage::Dense(d) => {
                let col = &d.as_slice()[j * self.m..(j + 1) * self.m];
                for (o, c) in out.iter_mut().zip(col) {
                    *o += alpha * c;
                }
            }
            Storage::Sparse(s) => {
                let (rows, vals) = s.column(j);
                for (&r, &v) in rows.iter().zip(vals) {
                    out[r] += alpha * v;
                }
            }
        }
    }

    /// `⟨A[:, j], y⟩`
    #[inline]
    pub(crate) fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        match &self.storage {
            Storage::Dense(d) => {
                let col = &d.as_slice()[j * self.m..(j + 1) * self.m];
                col.iter().zip(y).map(|(a, b)| a * b).sum()
            }
            Storage::Sparse(s) => {
                let (rows, vals) = s.column(j);
                rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum()
            }
        }
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d.column(j).norm(),
            Storage::Sparse(s) => s.column(j).1.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Returns a copy with column `j` multiplied by `scales[j]`.
    pub fn scale_columns(&self, scales: &[f64]) -> Result<Self> {
        check_len("scale_columns", self.n, scales.len())?;
        let storage = match &self.storage {
            Storage::Dense(d) => {
                let mut d = d.clone();
                for (j, &s) in scales.iter().enumerate() {
                    if s != 1.0 {
                        d.column_mut(j).scale_mut(s);
                    }
                }
                Storage::Dense(d)
            }
            Storage::Sparse(s) => {
                let mut s = s.clone();
                for (j, &sc) in scales.iter().enumerate() {
                    if sc != 1.0 {
                        for v in &mut s.values[s.col_ptr[j]..s.col_ptr[j + 1]] {
                            *v *= sc;
                        }
                    }
                }
                Storage::Sparse(s)
            }
        };
        Ok(Self {
            m: self.m,
            n: self.n,
            storage,
        })
    }

    /// `Ax`
    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("mat_vec", self.n, x.len())?;
        let mut out = vec![0.0; self.m];
        self.mat_vec_into(x, &mut out);
        Ok(out)
    }

    /// `Aᵀy`
    pub fn rmat_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("rmat_vec", self.m, y.len())?;
        let mut out = vec![0.0; self.n];
        self.rmat_vec_into(y, &mut out);
        Ok(out)
    }

    pub(crate) fn mat_vec_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.col_axpy(j, xj, out);
            }
        }
    }

    pub(crate) fn rmat_vec_into(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.col_dot(j, y);
        }
    }

    /// `A_idx · u` for a strictly increasing column index set, without
    /// extracting `A_idx`.
    pub fn gather_cols_mat_vec(&self, idx: &[usize], u: &[f64]) -> Result<Vec<f64>> {
        check_len("gather_cols_mat_vec", idx.len(), u.len())?;
        self.check_index_set(idx)?;
        let mut out = vec![0.0; self.m];
        for (&j, &uj) in idx.iter().zip(u) {
            self.col_axpy(j, uj, &mut out);
        }
        Ok(out)
    }

    /// Dense copy of the columns in `idx`, in order.
    pub fn gather_cols(&self, idx: &[usize]) -> Result<DMatrix<f64>> {
        self.check_index_set(idx)?;
        Ok(self.gather_cols_unchecked(idx))
    }

    pub(crate) fn gather_cols_unchecked(&self, idx: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            let col = &mut out.as_mut_slice()[c * self.m..(c + 1) * self.m];
            self.col_axpy(j, 1.0, col);
        }
        out
    }

    /// Column `j` of the result is `weights[j] · Σ_{k ∈ range_j, mask_k} A[:, k]`.
    ///
    /// Ranges are `(start, len)` pairs and must be disjoint and in bounds; the
    /// optional 0-1 mask selects which columns participate.
    pub fn block_sum_cols(
        &self,
        ranges: &[(usize, usize)],
        weights: &[f64],
        mask: Option<&[bool]>,
    ) -> Result<DMatrix<f64>> {
        check_len("block_sum_cols weights", ranges.len(), weights.len())?;
        if let Some(mask) = mask {
            check_len("block_sum_cols mask", self.n, mask.len())?;
        }
        let mut sorted: Vec<(usize, usize)> = ranges.to_vec();
        sorted.sort_unstable();
        for &(s, l) in &sorted {
            if s + l > self.n {
                return Err(Error::IndexOutOfRange {
                    index: s + l - 1,
                    dim: self.n,
                });
            }
        }
        if sorted.windows(2).any(|w| w[0].0 + w[0].1 > w[1].0) {
            return Err(Error::InvalidParameter("column ranges overlap".into()));
        }
        Ok(self.block_sum_cols_unchecked(ranges, weights, mask))
    }

    pub(crate) fn block_sum_cols_unchecked(
        &self,
        ranges: &[(usize, usize)],
        weights: &[f64],
        mask: Option<&[bool]>,
    ) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, ranges.len());
        for (c, (&(start, len), &w)) in ranges.iter().zip(weights).enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = &mut out.as_mut_slice()[c * self.m..(c + 1) * self.m];
            for k in start..start + len {
                if mask.is_none_or(|mk| mk[k]) {
                    self.col_axpy(k, w, col);
                }
            }
        }
        out
    }

    fn check_index_set(&self, idx: &[usize]) -> Result<()> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                dim: self.n,
            });
        }
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "column index set must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}
