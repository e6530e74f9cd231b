//! Sparse containers: coordinate storage with an on-demand compressed view.
//!
//! Both containers are immutable after construction. The compressed-column
//! view is built lazily behind a `OnceLock`, so matrices can be shared across
//! threads and the compression cost is paid once, by whichever user needs it
//! first.

use std::ops::Range;
use std::sync::OnceLock;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Compressed-sparse-column view.
///
/// Column `j` owns the half-open slice `col_ptr[j] .. col_ptr[j + 1]` of
/// `row_idx` / `values`. Row indices are strictly increasing within each
/// column: duplicates have been summed and entries whose value is exactly
/// `0.0` have been dropped (structural zeros only — small values are never
/// filtered).
#[derive(Debug, Clone, PartialEq)]
pub struct Csc {
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    fn build(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Csc {
        let _ = nrows;
        let mut triples: Vec<(usize, usize, f64)> =
            entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        triples.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(triples.len());
        let mut values = Vec::with_capacity(triples.len());
        let mut it = triples.into_iter().peekable();
        while let Some((c, r, mut v)) = it.next() {
            while let Some(&(c2, r2, v2)) = it.peek() {
                if c2 == c && r2 == r {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v == 0.0 {
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Csc {
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of column `j` as parallel (row, value) slices.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }
}

/// General sparse matrix.
///
/// Holds the coordinate entries it was constructed with (duplicates and
/// explicit zeros permitted) plus a cached compressed view. All operations
/// read the compressed view, so they see the canonical, deduplicated matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
    csc: OnceLock<Csc>,
}

impl SparseMatrix {
    /// Validates every index against the stated shape.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, _) in &entries {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            entries,
            csc: OnceLock::new(),
        })
    }

    pub fn empty(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            entries: Vec::new(),
            csc: OnceLock::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n).map(|i| (i, i, 1.0)).collect();
        SparseMatrix {
            nrows: n,
            ncols: n,
            entries,
            csc: OnceLock::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// The compressed view, built on first use.
    pub fn csc(&self) -> &Csc {
        self.csc
            .get_or_init(|| Csc::build(self.nrows, self.ncols, &self.entries))
    }

    /// Structural nonzero count of the canonical (compressed) matrix.
    pub fn nnz(&self) -> usize {
        self.csc().nnz()
    }

    /// Canonical form: entry list rewritten in column-then-row order with
    /// duplicates summed and exact zeros dropped; the compressed view is
    /// already materialized on the result.
    pub fn to_compressed(&self) -> SparseMatrix {
        let csc = self.csc().clone();
        let entries = csc_triples(&csc);
        let m = SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            entries,
            csc: OnceLock::new(),
        };
        m.csc.set(csc).expect("fresh OnceLock");
        m
    }

    /// Canonical triples in column-then-row order.
    pub fn canonical_triples(&self) -> Vec<(usize, usize, f64)> {
        csc_triples(self.csc())
    }

    pub fn max_abs(&self) -> f64 {
        self.csc()
            .values
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Indices of columns holding at least one structural nonzero.
    pub fn nonzero_cols(&self) -> Vec<usize> {
        let csc = self.csc();
        (0..self.ncols)
            .filter(|&j| csc.col_ptr[j + 1] > csc.col_ptr[j])
            .collect()
    }

    /// `out(i, j) = self(p_row.forward[i], p_col.forward[j])`. Pure
    /// relabeling: the nonzero count is unchanged.
    pub fn permute(&self, p_row: &Permutation, p_col: &Permutation) -> Result<SparseMatrix> {
        if p_row.len() != self.nrows || p_col.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "permutation lengths ({}, {}) do not match matrix shape {} x {}",
                p_row.len(),
                p_col.len(),
                self.nrows,
                self.ncols
            )));
        }
        let inv_row = p_row.inverse();
        let inv_col = p_col.inverse();
        let entries = self
            .canonical_triples()
            .into_iter()
            .map(|(r, c, v)| (inv_row.forward()[r], inv_col.forward()[c], v))
            .collect();
        SparseMatrix::from_triplets(self.nrows, self.ncols, entries)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let entries = self
            .canonical_triples()
            .into_iter()
            .map(|(r, c, v)| (c, r, v))
            .collect();
        SparseMatrix::from_triplets(self.ncols, self.nrows, entries)
            .expect("transpose of a valid matrix is valid")
    }

    /// Submatrix copy with indices rebased to the range starts.
    pub fn extract(&self, rows: Range<usize>, cols: Range<usize>) -> Result<SparseMatrix> {
        if rows.end > self.nrows
            || cols.end > self.ncols
            || rows.start > rows.end
            || cols.start > cols.end
        {
            return Err(Error::DimensionMismatch(format!(
                "extract range ({:?}, {:?}) invalid for {} x {} matrix",
                rows, cols, self.nrows, self.ncols
            )));
        }
        let csc = self.csc();
        let mut entries = Vec::new();
        for c in cols.clone() {
            let (rs, vs) = csc.col(c);
            for (&r, &v) in rs.iter().zip(vs) {
                if rows.contains(&r) {
                    entries.push((r - rows.start, c - cols.start, v));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), cols.len(), entries)
    }

    /// Sparse-times-dense product `self * b`.
    pub fn spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.nrows() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "spmm: {} x {} times {} x {}",
                self.nrows,
                self.ncols,
                b.nrows(),
                b.ncols()
            )));
        }
        let csc = self.csc();
        let mut out = DenseMatrix::zeros(self.nrows, b.ncols());
        for k in 0..b.ncols() {
            let bk = b.col(k);
            let ok = out.col_mut(k);
            for j in 0..self.ncols {
                let xj = bk[j];
                if xj == 0.0 {
                    continue;
                }
                let (rows, vals) = csc.col(j);
                for (&r, &v) in rows.iter().zip(vals) {
                    ok[r] += v * xj;
                }
            }
        }
        Ok(out)
    }

    /// Sparse matrix-vector product `self * x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: {} x {} times vector of length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        let csc = self.csc();
        let mut out = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = csc.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r] += v * xj;
            }
        }
        Ok(out)
    }

    /// Transposed product `selfᵀ * y` without materializing the transpose.
    pub fn spmv_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "spmv_t: {} x {} transposed times vector of length {}",
                self.nrows,
                self.ncols,
                y.len()
            )));
        }
        let csc = self.csc();
        let mut out = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            let (rows, vals) = csc.col(j);
            let mut acc = 0.0;
            for (&r, &v) in rows.iter().zip(vals) {
                acc += v * y[r];
            }
            out[j] = acc;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.canonical_triples() {
            out.set(r, c, v);
        }
        out
    }
}

impl PartialEq for SparseMatrix {
    /// Canonical comparison: same shape, same compressed entries.
    fn eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows && self.ncols == other.ncols && self.csc() == other.csc()
    }
}

fn csc_triples(csc: &Csc) -> Vec<(usize, usize, f64)> {
    let ncols = csc.col_ptr.len() - 1;
    let mut out = Vec::with_capacity(csc.nnz());
    for j in 0..ncols {
        let (rows, vals) = csc.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            out.push((r, j, v));
        }
    }
    out
}

/// Symmetric sparse matrix storing the lower triangle only (`row >= col`).
#[derive(Debug, Clone)]
pub struct SymmetricSparse {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
    canonical: OnceLock<Vec<(usize, usize, f64)>>,
}

impl SymmetricSparse {
    /// Entries must satisfy `row >= col`; the upper triangle is implicit.
    pub fn from_triplets(dim: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, _) in &entries {
            if r >= dim || c >= dim {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows: dim,
                    ncols: dim,
                });
            }
            if r < c {
                return Err(Error::InvalidParameter(format!(
                    "symmetric storage expects row >= col, got ({}, {})",
                    r, c
                )));
            }
        }
        Ok(SymmetricSparse {
            dim,
            entries,
            canonical: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lower-triangle entries in column-then-row order, duplicates summed,
    /// exact zeros dropped.
    pub fn canonical(&self) -> &[(usize, usize, f64)] {
        self.canonical.get_or_init(|| {
            let mut triples: Vec<(usize, usize, f64)> =
                self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
            triples.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(triples.len());
            let mut it = triples.into_iter().peekable();
            while let Some((c, r, mut v)) = it.next() {
                while let Some(&(c2, r2, v2)) = it.peek() {
                    if c2 == c && r2 == r {
                        v += v2;
                        it.next();
                    } else {
                        break;
                    }
                }
                if v != 0.0 {
                    out.push((r, c, v));
                }
            }
            out
        })
    }

    /// Structural nonzeros in the stored (lower) triangle.
    pub fn nnz_lower(&self) -> usize {
        self.canonical().len()
    }

    /// Structural nonzeros of the full symmetric matrix (off-diagonal
    /// entries counted twice).
    pub fn nnz_full(&self) -> usize {
        self.canonical()
            .iter()
            .map(|&(r, c, _)| if r == c { 1 } else { 2 })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.canonical()
            .iter()
            .fold(0.0_f64, |acc, &(_, _, v)| acc.max(v.abs()))
    }

    /// Expands into a general sparse matrix with both triangles stored.
    pub fn to_general(&self) -> SparseMatrix {
        let mut entries = Vec::with_capacity(self.nnz_full());
        for &(r, c, v) in self.canonical() {
            entries.push((r, c, v));
            if r != c {
                entries.push((c, r, v));
            }
        }
        SparseMatrix::from_triplets(self.dim, self.dim, entries)
            .expect("mirrored entries stay in range")
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in self.canonical() {
            out.set(r, c, v);
            if r != c {
                out.set(c, r, v);
            }
        }
        out
    }

    /// Symmetric matrix-vector product using the stored triangle.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "matvec: dim {} times vector of length {}",
                self.dim,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.dim];
        for &(r, c, v) in self.canonical() {
            out[r] += v * x[c];
            if r != c {
                out[c] += v * x[r];
            }
        }
        Ok(out)
    }

    /// Copy with `delta` added to the diagonal entries in `range`.
    pub fn with_shifted_diagonal(&self, range: Range<usize>, delta: f64) -> SymmetricSparse {
        let mut entries: Vec<(usize, usize, f64)> = self.canonical().to_vec();
        for i in range {
            entries.push((i, i, delta));
        }
        SymmetricSparse::from_triplets(self.dim, entries).expect("diagonal entries stay in range")
    }
}

impl PartialEq for SymmetricSparse {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.canonical() == other.canonical()
    }
}
