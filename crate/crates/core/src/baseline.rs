//! No-reordering sparse symmetric-indefinite LDLᵀ used as a comparison
//! point.
//!
//! The factorization eliminates in the given order (natural or reversed)
//! with purely local pivoting: a 1×1 pivot when it passes the standard α
//! test against its column, otherwise a 2×2 pivot with the largest
//! off-diagonal partner swapped adjacent. Structure is tracked with a
//! no-cancellation boolean pattern — an entry that becomes structurally
//! nonzero stays counted even if its value cancels to zero — and a 2×2
//! elimination fills the union of its two columns. FLOPs are charged only
//! for structurally present entries, so the counts model what a sparse
//! implementation of this strategy would pay.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::ldlt::{Inertia, PivotBlock, BK_ALPHA};
use crate::sparse::SymmetricSparse;

/// Elimination order of the baseline; no fill-reducing analysis is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EliminationOrder {
    Natural,
    Reverse,
}

/// 2×2 pivots whose determinant is below this times the squared pivot scale
/// abort the factorization.
const DET_REL_TOL: f64 = 1e-13;

#[derive(Debug)]
pub struct BaselineFactors {
    n: usize,
    l: DenseMatrix,
    pattern: Vec<bool>,
    pivots: Vec<(usize, PivotBlock)>,
    perm: Vec<usize>,
    inertia: Inertia,
    factor_nnz: usize,
    input_nnz: usize,
    flops: u64,
    order: EliminationOrder,
}

fn pat_idx(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

fn swap_symmetric(
    n: usize,
    w: &mut [f64],
    pat: &mut [bool],
    perm: &mut [usize],
    a: usize,
    b: usize,
) {
    if a == b {
        return;
    }
    let (a, b) = (a.min(b), a.max(b));
    perm.swap(a, b);
    for col in 0..n {
        if col == a || col == b {
            continue;
        }
        let ra = pat_idx(n, a.max(col), a.min(col));
        let rb = pat_idx(n, b.max(col), b.min(col));
        w.swap(ra, rb);
        pat.swap(ra, rb);
    }
    let (da, db) = (pat_idx(n, a, a), pat_idx(n, b, b));
    w.swap(da, db);
    pat.swap(da, db);
}

/// Factorizes in the given elimination order with local pivoting only.
/// Returns `Breakdown` at the step where no acceptable pivot exists.
pub fn sparse_ldlt_baseline(
    m: &SymmetricSparse,
    order: EliminationOrder,
) -> Result<BaselineFactors> {
    let n = m.dim();
    let mut perm: Vec<usize> = match order {
        EliminationOrder::Natural => (0..n).collect(),
        EliminationOrder::Reverse => (0..n).rev().collect(),
    };

    // Dense numeric working copy and no-cancellation pattern, both in
    // elimination order. Only the lower triangle is referenced.
    let mut w = vec![0.0_f64; n * n];
    let mut pat = vec![false; n * n];
    for &(i, j, v) in m.canonical() {
        let (pi, pj) = match order {
            EliminationOrder::Natural => (i, j),
            EliminationOrder::Reverse => (n - 1 - i, n - 1 - j),
        };
        let (lo, hi) = (pi.min(pj), pi.max(pj));
        w[pat_idx(n, hi, lo)] = v;
        pat[pat_idx(n, hi, lo)] = true;
    }
    let input_nnz = m.nnz_lower();

    let mut pivots: Vec<(usize, PivotBlock)> = Vec::new();
    let mut inertia = Inertia::zero_dim();
    let mut factor_nnz = 0usize;
    let mut flops = 0u64;

    let mut k = 0usize;
    while k < n {
        let mut colmax = 0.0_f64;
        let mut r = k;
        for i in k + 1..n {
            let v = w[pat_idx(n, i, k)].abs();
            if v > colmax {
                colmax = v;
                r = i;
            }
        }
        let akk = w[pat_idx(n, k, k)];

        if akk.abs() >= BK_ALPHA * colmax && akk != 0.0 {
            // 1×1 pivot at k.
            let col: Vec<(usize, f64)> = (k + 1..n)
                .filter(|&i| pat[pat_idx(n, i, k)])
                .map(|i| (i, w[pat_idx(n, i, k)]))
                .collect();
            for &(i, v) in &col {
                w[pat_idx(n, i, k)] = v / akk;
            }
            flops += col.len() as u64;
            for (ci, &(i, _)) in col.iter().enumerate() {
                let lik = w[pat_idx(n, i, k)];
                for &(j, vj) in &col[..=ci] {
                    let idx = pat_idx(n, i, j);
                    w[idx] -= lik * vj;
                    pat[idx] = true;
                    flops += 2;
                }
            }
            factor_nnz += col.len() + 1;
            pivots.push((k, PivotBlock::One(akk)));
            if akk > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
            k += 1;
            continue;
        }

        if colmax == 0.0 || k + 1 >= n {
            // Zero pivot column, or an unpairable trailing row.
            return Err(Error::Breakdown { step: k });
        }

        // 2×2 pivot: bring the largest partner next to k.
        swap_symmetric(n, &mut w, &mut pat, &mut perm, r, k + 1);
        let a = w[pat_idx(n, k, k)];
        let b = w[pat_idx(n, k + 1, k)];
        let d = w[pat_idx(n, k + 1, k + 1)];
        let det = a * d - b * b;
        let scale = a.abs().max(b.abs()).max(d.abs());
        if det.abs() <= DET_REL_TOL * scale * scale {
            return Err(Error::Breakdown { step: k });
        }
        flops += 3;

        // Merged-column union drives both the update and the stored pattern.
        let union: Vec<(usize, f64, f64)> = (k + 2..n)
            .filter(|&i| pat[pat_idx(n, i, k)] || pat[pat_idx(n, i, k + 1)])
            .map(|i| (i, w[pat_idx(n, i, k)], w[pat_idx(n, i, k + 1)]))
            .collect();
        for &(i, w1, w2) in &union {
            w[pat_idx(n, i, k)] = (d * w1 - b * w2) / det;
            w[pat_idx(n, i, k + 1)] = (a * w2 - b * w1) / det;
            pat[pat_idx(n, i, k)] = true;
            pat[pat_idx(n, i, k + 1)] = true;
            flops += 8;
        }
        for (ci, &(i, _, _)) in union.iter().enumerate() {
            let l1i = w[pat_idx(n, i, k)];
            let l2i = w[pat_idx(n, i, k + 1)];
            for &(j, w1j, w2j) in &union[..=ci] {
                let idx = pat_idx(n, i, j);
                w[idx] -= l1i * w1j + l2i * w2j;
                pat[idx] = true;
                flops += 4;
            }
        }
        // Both stored columns carry the union.
        factor_nnz += 2 * union.len() + 3;
        pivots.push((k, PivotBlock::Two { a, b, c: d }));
        let (e1, e2) = PivotBlock::Two { a, b, c: d }.eigenvalues();
        for e in [e1, e2.expect("2x2 pivot has two eigenvalues")] {
            if e > 0.0 {
                inertia.positive += 1;
            } else if e < 0.0 {
                inertia.negative += 1;
            } else {
                return Err(Error::Breakdown { step: k });
            }
        }
        k += 2;
    }

    let l = DenseMatrix::from_fn(n, n, |i, j| w[pat_idx(n, i, j)]);
    Ok(BaselineFactors {
        n,
        l,
        pattern: pat,
        pivots,
        perm,
        inertia,
        factor_nnz,
        input_nnz,
        flops,
        order,
    })
}

impl BaselineFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> EliminationOrder {
        self.order
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// Structural entries of the factor: strict-lower pattern entries of the
    /// eliminated columns plus pivot-block entries.
    pub fn factor_nnz(&self) -> usize {
        self.factor_nnz
    }

    /// Factor entries beyond the input entry count.
    pub fn fill_nnz(&self) -> usize {
        self.factor_nnz.saturating_sub(self.input_nnz)
    }

    pub fn factor_flops(&self) -> u64 {
        self.flops
    }

    pub fn two_by_two_count(&self) -> usize {
        self.pivots
            .iter()
            .filter(|(_, p)| matches!(p, PivotBlock::Two { .. }))
            .count()
    }

    /// Solves `M x = b`. Charges FLOPs for structural entries only.
    pub fn solve_vec(&self, b: &[f64]) -> Result<(Vec<f64>, u64)> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs has length {}, matrix dimension is {}",
                b.len(),
                self.n
            )));
        }
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        let mut flops = 0u64;

        // Forward: unit lower triangular columns under each pivot block.
        for &(k, ref piv) in &self.pivots {
            let width = match piv {
                PivotBlock::One(_) => 1,
                PivotBlock::Two { .. } => 2,
            };
            for c in k..k + width {
                let xc = x[c];
                if xc == 0.0 {
                    continue;
                }
                for i in k + width..n {
                    if self.pattern[pat_idx(n, i, c)] {
                        x[i] -= self.l.get(i, c) * xc;
                        flops += 2;
                    }
                }
            }
        }
        // Block-diagonal solve.
        for &(k, ref piv) in &self.pivots {
            match piv {
                PivotBlock::One(d) => {
                    x[k] /= d;
                    flops += 1;
                }
                PivotBlock::Two { a, b, c } => {
                    let det = a * c - b * b;
                    let (r1, r2) = (x[k], x[k + 1]);
                    x[k] = (c * r1 - b * r2) / det;
                    x[k + 1] = (a * r2 - b * r1) / det;
                    flops += 11;
                }
            }
        }
        // Backward: transposed unit lower triangular.
        for &(k, ref piv) in self.pivots.iter().rev() {
            let width = match piv {
                PivotBlock::One(_) => 1,
                PivotBlock::Two { .. } => 2,
            };
            for c in (k..k + width).rev() {
                let mut acc = x[c];
                for i in k + width..n {
                    if self.pattern[pat_idx(n, i, c)] {
                        acc -= self.l.get(i, c) * x[i];
                        flops += 2;
                    }
                }
                x[c] = acc;
            }
        }

        let mut out = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        Ok((out, flops))
    }
}
