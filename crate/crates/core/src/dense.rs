//! Dense column-major matrix used by the factor kernels and for small blocks.

use crate::error::{Error, Result};

/// Dense matrix with column-major storage: entry `(i, j)` lives at
/// `data[j * nrows + i]`, so a column is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Wraps an existing column-major buffer; `data.len()` must equal
    /// `nrows * ncols`.
    pub fn from_column_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch(format!(
                "column-major buffer of length {} cannot hold a {} x {} matrix",
                data.len(),
                nrows,
                ncols
            )));
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.data[col * self.nrows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.data[col * self.nrows + row] = value;
    }

    #[inline]
    pub fn add_to(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.data[col * self.nrows + row] += value;
    }

    pub fn col(&self, col: usize) -> &[f64] {
        &self.data[col * self.nrows..(col + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.nrows..(col + 1) * self.nrows]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i))
    }

    /// Largest absolute difference between the matrix and its transpose.
    /// Zero for symmetric matrices; callers divide by `max_abs` for a
    /// relative measure.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols, "asymmetry needs a square matrix");
        let mut worst = 0.0_f64;
        for j in 0..self.ncols {
            for i in (j + 1)..self.nrows {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Replaces the matrix with `(M + Mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.nrows, self.ncols, "symmetrize needs a square matrix");
        for j in 0..self.ncols {
            for i in (j + 1)..self.nrows {
                let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, avg);
                self.set(j, i, avg);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_major_layout() {
        let mut m = DenseMatrix::zeros(2, 3);
        m.set(1, 2, 7.0);
        assert_eq!(m.data()[2 * 2 + 1], 7.0);
        assert_eq!(m.col(2), &[0.0, 7.0]);
    }

    #[test]
    fn identity_and_max_abs() {
        let m = DenseMatrix::identity(3);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.max_abs(), 1.0);
    }

    #[test]
    fn symmetrize_averages_both_triangles() {
        let mut m = DenseMatrix::from_fn(2, 2, |i, j| (2 * i + j) as f64);
        assert!(m.max_asymmetry() > 0.0);
        m.symmetrize();
        assert_eq!(m.max_asymmetry(), 0.0);
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.get(1, 0), 1.5);
    }

    #[test]
    fn from_column_major_checks_length() {
        assert!(DenseMatrix::from_column_major(2, 2, vec![0.0; 3]).is_err());
    }
}
