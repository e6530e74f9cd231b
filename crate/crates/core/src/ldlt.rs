//! Dense symmetric-indefinite factorization with Bunch-Kaufman pivoting.
//!
//! Produces `P M Pᵀ = L B Lᵀ` with unit lower-triangular `L` and a block
//! diagonal `B` of 1x1 and 2x2 pivots, using the classic partial-pivoting
//! strategy with `alpha = (1 + sqrt(17)) / 8`. The matrix inertia falls out
//! of the pivot blocks: each 1x1 pivot contributes its sign, each 2x2 pivot
//! the signs of its two closed-form eigenvalues (Sylvester's law makes the
//! congruence inertia-preserving).
//!
//! Rank deficiency is tolerated: when a trailing column is numerically zero
//! (below `1e-13 * max|M|`), a zero 1x1 pivot is recorded and counted in
//! `inertia.zero` instead of aborting. Solving requires a nonsingular matrix.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SymmetricSparse;

/// The Bunch-Kaufman pivot-acceptance constant, `(1 + sqrt(17)) / 8`.
pub const BK_ALPHA: f64 = 0.6403882032022076;

/// Relative threshold below which a pivot is recorded as an exact zero.
pub const ZERO_PIVOT_REL_TOL: f64 = 1e-13;

/// Eigenvalue sign counts of a symmetric matrix: (positive, negative, zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn zero_dim() -> Self {
        Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        }
    }

    pub fn add(self, other: Inertia) -> Inertia {
        Inertia {
            positive: self.positive + other.positive,
            negative: self.negative + other.negative,
            zero: self.zero + other.zero,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative + self.zero
    }
}

/// One diagonal pivot block: a scalar, or a symmetric 2x2 `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy)]
pub enum PivotBlock {
    One(f64),
    Two { a: f64, b: f64, c: f64 },
}

impl PivotBlock {
    /// Eigenvalues of the block (closed form for the 2x2 case).
    pub fn eigenvalues(&self) -> (f64, Option<f64>) {
        match *self {
            PivotBlock::One(d) => (d, None),
            PivotBlock::Two { a, b, c } => {
                let mid = 0.5 * (a + c);
                let rad = (0.5 * (a - c)).hypot(b);
                (mid - rad, Some(mid + rad))
            }
        }
    }
}

/// Factors of `P M Pᵀ = L B Lᵀ`.
#[derive(Debug, Clone)]
pub struct LbltFactors {
    n: usize,
    /// Unit lower-triangular factor; the strict lower triangle is meaningful.
    l: DenseMatrix,
    /// (start position, block) for each pivot in elimination order.
    pivots: Vec<(usize, PivotBlock)>,
    /// `perm[i]` = original index at permuted position `i`.
    perm: Vec<usize>,
    inertia: Inertia,
    flops: u64,
    zero_tol: f64,
}

/// Factors a symmetric matrix given in lower-triangle sparse form.
pub fn bunch_kaufman(m: &SymmetricSparse) -> Result<LbltFactors> {
    bunch_kaufman_dense(&m.to_dense())
}

/// Factors a dense symmetric matrix. Only the lower triangle is read.
pub fn bunch_kaufman_dense(m: &DenseMatrix) -> Result<LbltFactors> {
    bunch_kaufman_dense_with_tol(m, ZERO_PIVOT_REL_TOL)
}

/// As [`bunch_kaufman_dense`] with a caller-chosen relative zero-pivot
/// threshold.
pub fn bunch_kaufman_dense_with_tol(m: &DenseMatrix, zero_rel_tol: f64) -> Result<LbltFactors> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Bunch-Kaufman requires a square matrix, got {} x {}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();

    // Working copy, fully mirrored from the lower triangle. Columns left of
    // the elimination front hold computed L entries, so symmetric swaps move
    // the L history along with the trailing submatrix.
    let mut w = DenseMatrix::zeros(n, n);
    let mut max_abs = 0.0_f64;
    for j in 0..n {
        for i in j..n {
            let v = m.get(i, j);
            w.set(i, j, v);
            w.set(j, i, v);
            max_abs = max_abs.max(v.abs());
        }
    }
    let zero_tol = zero_rel_tol * max_abs;

    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::new();
    let mut flops = 0u64;

    let swap = |w: &mut DenseMatrix, perm: &mut Vec<usize>, p: usize, q: usize| {
        if p == q {
            return;
        }
        perm.swap(p, q);
        for j in 0..n {
            let a = w.get(p, j);
            let b = w.get(q, j);
            w.set(p, j, b);
            w.set(q, j, a);
        }
        for i in 0..n {
            let a = w.get(i, p);
            let b = w.get(i, q);
            w.set(i, p, b);
            w.set(i, q, a);
        }
    };

    let mut k = 0;
    while k < n {
        let akk = w.get(k, k).abs();

        // Largest off-diagonal magnitude in the trailing part of column k.
        let mut r = k;
        let mut colmax = 0.0_f64;
        for i in (k + 1)..n {
            let mag = w.get(i, k).abs();
            if mag > colmax {
                colmax = mag;
                r = i;
            }
        }

        if akk.max(colmax) <= zero_tol {
            // The trailing row/column is numerically zero: a zero pivot.
            pivots.push((k, PivotBlock::One(0.0)));
            k += 1;
            continue;
        }

        let use_two = if akk >= BK_ALPHA * colmax {
            false
        } else {
            // Largest magnitude in trailing row r, excluding the diagonal.
            let mut rowmax = 0.0_f64;
            for j in k..n {
                if j != r {
                    rowmax = rowmax.max(w.get(r, j).abs());
                }
            }
            if akk * rowmax >= BK_ALPHA * colmax * colmax {
                false
            } else if w.get(r, r).abs() >= BK_ALPHA * rowmax {
                swap(&mut w, &mut perm, k, r);
                false
            } else {
                swap(&mut w, &mut perm, k + 1, r);
                true
            }
        };

        if !use_two {
            let d = w.get(k, k);
            pivots.push((k, PivotBlock::One(d)));
            let col: Vec<f64> = ((k + 1)..n).map(|i| w.get(i, k)).collect();
            for i in (k + 1)..n {
                let l = w.get(i, k) / d;
                flops += 1;
                w.set(i, k, l);
            }
            for j in (k + 1)..n {
                let cj = col[j - k - 1];
                if cj == 0.0 {
                    continue;
                }
                for i in j..n {
                    let v = w.get(i, j) - w.get(i, k) * cj;
                    w.set(i, j, v);
                    w.set(j, i, v);
                    flops += 2;
                }
            }
            k += 1;
        } else {
            let a = w.get(k, k);
            let b = w.get(k + 1, k);
            let c = w.get(k + 1, k + 1);
            let det = a * c - b * b;
            flops += 3;
            pivots.push((k, PivotBlock::Two { a, b, c }));

            let col1: Vec<f64> = ((k + 2)..n).map(|i| w.get(i, k)).collect();
            let col2: Vec<f64> = ((k + 2)..n).map(|i| w.get(i, k + 1)).collect();
            for i in (k + 2)..n {
                let w1 = col1[i - k - 2];
                let w2 = col2[i - k - 2];
                let l1 = (c * w1 - b * w2) / det;
                let l2 = (a * w2 - b * w1) / det;
                flops += 8;
                w.set(i, k, l1);
                w.set(i, k + 1, l2);
            }
            // The in-block subdiagonal entry is absorbed by the 2x2 pivot.
            w.set(k + 1, k, 0.0);
            for j in (k + 2)..n {
                let c1 = col1[j - k - 2];
                let c2 = col2[j - k - 2];
                if c1 == 0.0 && c2 == 0.0 {
                    continue;
                }
                for i in j..n {
                    let v = w.get(i, j) - w.get(i, k) * c1 - w.get(i, k + 1) * c2;
                    w.set(i, j, v);
                    w.set(j, i, v);
                    flops += 4;
                }
            }
            k += 2;
        }
    }

    // Extract unit-lower L from the pivot history.
    let mut l = DenseMatrix::identity(n);
    for &(start, ref block) in &pivots {
        let width = match block {
            PivotBlock::One(_) => 1,
            PivotBlock::Two { .. } => 2,
        };
        for col in start..start + width {
            for i in (start + width)..n {
                l.set(i, col, w.get(i, col));
            }
        }
    }

    let mut inertia = Inertia::zero_dim();
    for &(_, ref block) in &pivots {
        let (e1, e2) = block.eigenvalues();
        for e in std::iter::once(e1).chain(e2) {
            if e.abs() <= zero_tol {
                inertia.zero += 1;
            } else if e > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
        }
    }

    Ok(LbltFactors {
        n,
        l,
        pivots,
        perm,
        inertia,
        flops,
        zero_tol,
    })
}

impl LbltFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    pub fn factor_flops(&self) -> u64 {
        self.flops
    }

    pub fn pivots(&self) -> &[(usize, PivotBlock)] {
        &self.pivots
    }

    /// Number of 2x2 pivot blocks chosen.
    pub fn two_by_two_count(&self) -> usize {
        self.pivots
            .iter()
            .filter(|(_, b)| matches!(b, PivotBlock::Two { .. }))
            .count()
    }

    /// Factor storage: the dense strict lower triangle plus the pivot block
    /// entries (1 per scalar pivot, 3 per 2x2 block).
    pub fn factor_nnz(&self) -> usize {
        let pivot_entries: usize = self
            .pivots
            .iter()
            .map(|(_, b)| match b {
                PivotBlock::One(_) => 1,
                PivotBlock::Two { .. } => 3,
            })
            .sum();
        self.n * (self.n - 1) / 2 + pivot_entries
    }

    /// Solves `M x = rhs`; the matrix must be nonsingular
    /// (`inertia().zero == 0`). Returns the solution and the FLOPs spent.
    pub fn solve_vec(&self, rhs: &[f64]) -> (Vec<f64>, u64) {
        assert_eq!(rhs.len(), self.n, "rhs length mismatch");
        assert_eq!(
            self.inertia.zero, 0,
            "solve requires a nonsingular factorization"
        );
        let n = self.n;
        let mut flops = 0u64;

        // x = P rhs
        let mut x: Vec<f64> = self.perm.iter().map(|&orig| rhs[orig]).collect();

        // Forward: L z = x (unit lower).
        for k in 0..n {
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let lik = self.l.get(i, k);
                if lik != 0.0 {
                    x[i] -= lik * xk;
                    flops += 2;
                }
            }
        }

        // Block-diagonal solve.
        for &(start, ref block) in &self.pivots {
            match *block {
                PivotBlock::One(d) => {
                    x[start] /= d;
                    flops += 1;
                }
                PivotBlock::Two { a, b, c } => {
                    let det = a * c - b * b;
                    let r1 = x[start];
                    let r2 = x[start + 1];
                    x[start] = (c * r1 - b * r2) / det;
                    x[start + 1] = (a * r2 - b * r1) / det;
                    flops += 11;
                }
            }
        }

        // Backward: Lᵀ y = x.
        for k in (0..n).rev() {
            let mut acc = x[k];
            for i in (k + 1)..n {
                let lik = self.l.get(i, k);
                if lik != 0.0 {
                    acc -= lik * x[i];
                    flops += 2;
                }
            }
            x[k] = acc;
        }

        // Undo the permutation: out[perm[i]] = x[i].
        let mut out = vec![0.0; n];
        for (pos, &orig) in self.perm.iter().enumerate() {
            out[orig] = x[pos];
        }
        (out, flops)
    }

    /// Rebuilds the matrix from its factors (test support): returns
    /// `Pᵀ (L B Lᵀ) P`, which should equal the input.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.n;
        // B Lᵀ
        let mut blt = DenseMatrix::zeros(n, n);
        for &(start, ref block) in &self.pivots {
            match *block {
                PivotBlock::One(d) => {
                    for j in 0..n {
                        let lt = if j == start {
                            1.0
                        } else {
                            self.l.get(j, start)
                        };
                        blt.set(start, j, d * lt);
                    }
                }
                PivotBlock::Two { a, b, c } => {
                    for j in 0..n {
                        let lt1 = if j == start {
                            1.0
                        } else if j == start + 1 {
                            0.0
                        } else {
                            self.l.get(j, start)
                        };
                        let lt2 = if j == start + 1 {
                            1.0
                        } else if j == start {
                            0.0
                        } else {
                            self.l.get(j, start + 1)
                        };
                        blt.set(start, j, a * lt1 + b * lt2);
                        blt.set(start + 1, j, b * lt1 + c * lt2);
                    }
                }
            }
        }
        // L (B Lᵀ), then undo the permutation.
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for t in 0..=i.min(n - 1) {
                    let l = if t == i { 1.0 } else { self.l.get(i, t) };
                    if l != 0.0 {
                        acc += l * blt.get(t, j);
                    }
                }
                out.set(self.perm[i], self.perm[j], acc);
            }
        }
        out
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tol
    }
}
