//! Dense LU factorization with partial pivoting.
//!
//! Used for the diagonal blocks of the block-triangular pivot solver. Blocks
//! are small and dense, so a plain right-looking elimination over column-major
//! storage is the appropriate kernel. FLOPs are counted with the convention
//! used across the crate: one multiply-add pair costs 2, one division costs 1.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot below `1e-12 * max|input|` is singular.
const SINGULAR_REL_TOL: f64 = 1e-12;

/// Packed LU factors: `L` (unit lower) and `U` share one dense matrix; the
/// row swap chosen at step `k` is recorded in `row_swaps[k]`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: DenseMatrix,
    row_swaps: Vec<usize>,
    flops: u64,
}

/// Factors a square dense block. Errors with [`Error::Singular`] when no
/// acceptable pivot remains; the caller owning the enclosing block structure
/// attaches the block index.
pub fn lu_factor(block: &DenseMatrix) -> Result<LuFactors> {
    if block.nrows() != block.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "LU requires a square block, got {} x {}",
            block.nrows(),
            block.ncols()
        )));
    }
    let n = block.nrows();
    let tol = SINGULAR_REL_TOL * block.max_abs();
    let mut lu = block.clone();
    let mut row_swaps = Vec::with_capacity(n);
    let mut flops = 0u64;

    for k in 0..n {
        // Partial pivoting: largest magnitude in column k at or below the diagonal.
        let mut pivot_row = k;
        let mut pivot_mag = lu.get(k, k).abs();
        for i in (k + 1)..n {
            let mag = lu.get(i, k).abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag <= tol {
            return Err(Error::Singular(format!(
                "pivot magnitude {:.3e} at step {} below threshold {:.3e}",
                pivot_mag, k, tol
            )));
        }
        row_swaps.push(pivot_row);
        if pivot_row != k {
            for j in 0..n {
                let a = lu.get(k, j);
                let b = lu.get(pivot_row, j);
                lu.set(k, j, b);
                lu.set(pivot_row, j, a);
            }
        }

        let pivot = lu.get(k, k);
        for i in (k + 1)..n {
            let v = lu.get(i, k);
            if v == 0.0 {
                continue;
            }
            lu.set(i, k, v / pivot);
            flops += 1;
        }
        for j in (k + 1)..n {
            let ukj = lu.get(k, j);
            if ukj == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let v = lu.get(i, j) - lu.get(i, k) * ukj;
                lu.set(i, j, v);
                flops += 2;
            }
        }
    }

    Ok(LuFactors {
        n,
        lu,
        row_swaps,
        flops,
    })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// FLOPs spent in the factorization.
    pub fn factor_flops(&self) -> u64 {
        self.flops
    }

    /// Solves in place for a column-major panel of `ncols` right-hand sides;
    /// returns the FLOPs spent.
    pub fn solve_in_place(&self, panel: &mut [f64], ncols: usize) -> u64 {
        let n = self.n;
        assert_eq!(panel.len(), n * ncols, "panel shape mismatch");
        let mut flops = 0u64;
        for col in 0..ncols {
            let x = &mut panel[col * n..(col + 1) * n];
            // Apply the recorded row swaps.
            for k in 0..n {
                let r = self.row_swaps[k];
                if r != k {
                    x.swap(k, r);
                }
            }
            // Forward substitution with unit L.
            for k in 0..n {
                let xk = x[k];
                if xk == 0.0 {
                    continue;
                }
                for i in (k + 1)..n {
                    x[i] -= self.lu.get(i, k) * xk;
                    flops += 2;
                }
            }
            // Back substitution with U.
            for k in (0..n).rev() {
                let mut acc = x[k];
                for j in (k + 1)..n {
                    acc -= self.lu.get(k, j) * x[j];
                    flops += 2;
                }
                x[k] = acc / self.lu.get(k, k);
                flops += 1;
            }
        }
        flops
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> (Vec<f64>, u64) {
        let mut x = rhs.to_vec();
        let flops = self.solve_in_place(&mut x, 1);
        (x, flops)
    }
}
