//! Factorization and backsolve for block lower-triangular matrices.
//!
//! Only the diagonal blocks are factorized; off-diagonal blocks are stored
//! as-is in whichever representation fits them (diagonal array, dense, or
//! sparse), so the factors carry exactly zero fill outside the diagonal
//! blocks. Diagonal blocks that are exact identities are tagged and skipped
//! entirely — the fast path that makes neural-network pivot matrices free to
//! "factorize".
//!
//! The solve is the classic sequential block forward substitution
//! `X_i = M_ii⁻¹ (B_i − Σ_{j<i} M_ij X_j)`, processed in RHS column panels.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::block::{BlockStructure, OffDiagTag};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::lu::{lu_factor, LuFactors};
use crate::perm::Permutation;
use crate::sparse::SparseMatrix;

/// RHS columns processed together during solves.
pub const PANEL_WIDTH: usize = 32;

/// Factor of one diagonal block.
#[derive(Debug)]
pub enum DiagFactor {
    /// The block is exactly the identity: nothing stored, solves are free.
    Identity { dim: usize },
    /// Anything else: densified and LU-factorized.
    Lu(LuFactors),
}

/// Stored representation of one off-diagonal block.
#[derive(Debug)]
pub enum OffDiagBlock {
    /// Entries only on the local diagonal; `values[k]` multiplies source
    /// position `k` (structural zeros stored as 0.0).
    Diagonal(Vec<f64>),
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl OffDiagBlock {
    /// Count of nonzero values actually stored.
    fn nnz(&self) -> usize {
        match self {
            OffDiagBlock::Diagonal(v) => v.iter().filter(|x| **x != 0.0).count(),
            OffDiagBlock::Dense(d) => d.data().iter().filter(|x| **x != 0.0).count(),
            OffDiagBlock::Sparse(s) => s.nnz(),
        }
    }
}

/// Factors of a block lower-triangular matrix, plus the permutations that
/// produced the triangular form.
#[derive(Debug)]
pub struct BtFactors {
    structure: BlockStructure,
    p_row: Permutation,
    p_col: Permutation,
    diag: Vec<DiagFactor>,
    /// `(block_row, block_col, block)` with `block_row > block_col`, sorted.
    off_diag: Vec<(usize, usize, OffDiagBlock)>,
    factor_flops: u64,
    solve_flops: AtomicU64,
}

/// Factorizes the diagonal blocks of `m` after permuting it into the block
/// lower-triangular form described by `structure`.
///
/// The permuted matrix `m(p_row[i], p_col[j])` must have no entries above the
/// block diagonal. Off-diagonal blocks are stored per the structure's tag
/// when present (a `Diagonal` tag is verified), otherwise auto-classified:
/// diagonal pattern → diagonal array, density ≥ 0.5 → dense, else sparse.
pub fn bt_factorize(
    m: &SparseMatrix,
    p_row: &Permutation,
    p_col: &Permutation,
    structure: &BlockStructure,
) -> Result<BtFactors> {
    let permuted = m.permute(p_row, p_col)?;
    structure.check_block_lower(&permuted)?;

    let nb = structure.num_blocks();
    let mut diag = Vec::with_capacity(nb);
    let mut factor_flops = 0u64;
    for b in 0..nb {
        let r = structure.block_range(b);
        let sub = permuted.extract(r.clone(), r.clone())?;
        if is_exact_identity(&sub) {
            diag.push(DiagFactor::Identity { dim: r.len() });
            continue;
        }
        let dense = sub.to_dense();
        match lu_factor(&dense) {
            Ok(f) => {
                factor_flops += f.factor_flops();
                diag.push(DiagFactor::Lu(f));
            }
            Err(Error::Singular(_)) => {
                return Err(Error::SingularBlock { block: b });
            }
            Err(e) => return Err(e),
        }
    }

    // Bucket off-diagonal entries by block coordinates.
    let mut buckets: std::collections::BTreeMap<(usize, usize), Vec<(usize, usize, f64)>> =
        std::collections::BTreeMap::new();
    for (i, j, v) in permuted.canonical_triples() {
        let (bi, bj) = (structure.block_of(i), structure.block_of(j));
        if bi != bj {
            let (ri, rj) = (structure.block_range(bi), structure.block_range(bj));
            buckets
                .entry((bi, bj))
                .or_default()
                .push((i - ri.start, j - rj.start, v));
        }
    }

    let mut off_diag = Vec::with_capacity(buckets.len());
    for ((bi, bj), entries) in buckets {
        let (r, c) = (structure.block_size(bi), structure.block_size(bj));
        let is_diag_pattern = entries.iter().all(|&(li, lj, _)| li == lj);
        let tag = structure.tag(bi, bj).unwrap_or(if is_diag_pattern {
            OffDiagTag::Diagonal
        } else if entries.len() * 2 >= r * c {
            OffDiagTag::Dense
        } else {
            OffDiagTag::Sparse
        });
        let block = match tag {
            OffDiagTag::Diagonal => {
                if !is_diag_pattern {
                    return Err(Error::StructureViolation(format!(
                        "block ({bi}, {bj}) tagged diagonal but has off-diagonal entries"
                    )));
                }
                let mut values = vec![0.0; r.min(c)];
                for &(li, _, v) in &entries {
                    values[li] += v;
                }
                OffDiagBlock::Diagonal(values)
            }
            OffDiagTag::Dense => {
                let mut d = DenseMatrix::zeros(r, c);
                for &(li, lj, v) in &entries {
                    d.add_to(li, lj, v);
                }
                OffDiagBlock::Dense(d)
            }
            OffDiagTag::Sparse => OffDiagBlock::Sparse(SparseMatrix::from_triplets(r, c, entries)?),
        };
        off_diag.push((bi, bj, block));
    }

    Ok(BtFactors {
        structure: structure.clone(),
        p_row: p_row.clone(),
        p_col: p_col.clone(),
        diag,
        off_diag,
        factor_flops,
        solve_flops: AtomicU64::new(0),
    })
}

fn is_exact_identity(m: &SparseMatrix) -> bool {
    let triples = m.canonical_triples();
    m.nrows() == m.ncols()
        && triples.len() == m.nrows()
        && triples.iter().all(|&(i, j, v)| i == j && v == 1.0)
}

impl BtFactors {
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn factor_flops(&self) -> u64 {
        self.factor_flops
    }

    /// Cumulative FLOPs spent in solves against these factors.
    pub fn solve_flops(&self) -> u64 {
        self.solve_flops.load(Ordering::Relaxed)
    }

    pub fn diag_factors(&self) -> &[DiagFactor] {
        &self.diag
    }

    /// True when every diagonal block rode the identity fast path.
    pub fn all_identity_blocks(&self) -> bool {
        self.diag
            .iter()
            .all(|d| matches!(d, DiagFactor::Identity { .. }))
    }

    /// Nonzero values stored outside the diagonal blocks. Equal to the
    /// off-diagonal nnz of the input: the factorization adds nothing there.
    pub fn off_diagonal_nnz(&self) -> usize {
        self.off_diag.iter().map(|(_, _, b)| b.nnz()).sum()
    }

    /// Total factor storage in nonzero-entry terms: identity blocks count
    /// their implicit unit diagonal, LU blocks their full dense square, plus
    /// all stored off-diagonal values.
    pub fn factor_nnz(&self) -> usize {
        let diag: usize = self
            .diag
            .iter()
            .map(|d| match d {
                DiagFactor::Identity { dim } => *dim,
                DiagFactor::Lu(f) => f.dim() * f.dim(),
            })
            .sum();
        diag + self.off_diagonal_nnz()
    }

    /// Solves the original (unpermuted) system `M X = rhs` for a multi-column
    /// right-hand side.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        let dim = self.dim();
        if rhs.nrows() != dim {
            return Err(Error::DimensionMismatch(format!(
                "rhs has {} rows, expected {dim}",
                rhs.nrows()
            )));
        }
        let q = rhs.ncols();
        let mut out = DenseMatrix::zeros(dim, q);
        let mut flops = 0u64;
        let mut start = 0;
        while start < q {
            let width = PANEL_WIDTH.min(q - start);
            // Permute rhs rows into the triangular ordering.
            let mut panel = DenseMatrix::zeros(dim, width);
            for c in 0..width {
                let src = rhs.col(start + c);
                let dst = panel.col_mut(c);
                for (i, d) in dst.iter_mut().enumerate() {
                    *d = src[self.p_row.forward()[i]];
                }
            }
            flops += self.solve_permuted_panel(&mut panel)?;
            // Undo the column permutation: x[p_col[i]] = y[i].
            for c in 0..width {
                let src = panel.col(c);
                let dst = out.col_mut(start + c);
                for (i, &v) in src.iter().enumerate() {
                    dst[self.p_col.forward()[i]] = v;
                }
            }
            start += width;
        }
        self.solve_flops.fetch_add(flops, Ordering::Relaxed);
        Ok(out)
    }

    /// Single right-hand-side variant of [`BtFactors::solve`].
    pub fn solve_vec(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = DenseMatrix::from_column_major(rhs.len(), 1, rhs.to_vec())?;
        let x = self.solve(&m)?;
        Ok(x.col(0).to_vec())
    }

    /// Block forward substitution on an already-permuted panel, in place.
    fn solve_permuted_panel(&self, panel: &mut DenseMatrix) -> Result<u64> {
        let q = panel.ncols();
        let mut flops = 0u64;
        let mut next_off = 0usize;
        for b in 0..self.structure.num_blocks() {
            // Subtract contributions from earlier blocks. off_diag is sorted
            // by (block_row, block_col), so each block row is contiguous.
            while next_off < self.off_diag.len() && self.off_diag[next_off].0 == b {
                let (_, bj, ref block) = self.off_diag[next_off];
                let ri = self.structure.block_range(b);
                let rj = self.structure.block_range(bj);
                match block {
                    OffDiagBlock::Diagonal(values) => {
                        for c in 0..q {
                            let col = panel.col_mut(c);
                            for (k, &v) in values.iter().enumerate() {
                                col[ri.start + k] -= v * col[rj.start + k];
                            }
                        }
                        flops += 2 * values.len() as u64 * q as u64;
                    }
                    OffDiagBlock::Dense(d) => {
                        for c in 0..q {
                            let col = panel.col_mut(c);
                            for lj in 0..d.ncols() {
                                let xv = col[rj.start + lj];
                                let dcol = d.col(lj);
                                for (li, &dv) in dcol.iter().enumerate() {
                                    col[ri.start + li] -= dv * xv;
                                }
                            }
                        }
                        flops += 2 * d.nrows() as u64 * d.ncols() as u64 * q as u64;
                    }
                    OffDiagBlock::Sparse(s) => {
                        let csc = s.csc();
                        for c in 0..q {
                            let col = panel.col_mut(c);
                            for lj in 0..s.ncols() {
                                let (rows, vals) = csc.col(lj);
                                let xv = col[rj.start + lj];
                                for (&li, &v) in rows.iter().zip(vals) {
                                    col[ri.start + li] -= v * xv;
                                }
                            }
                        }
                        flops += 2 * s.nnz() as u64 * q as u64;
                    }
                }
                next_off += 1;
            }

            // Solve the diagonal block.
            match &self.diag[b] {
                DiagFactor::Identity { .. } => {}
                DiagFactor::Lu(f) => {
                    let r = self.structure.block_range(b);
                    let mut buf = vec![0.0; r.len() * q];
                    for c in 0..q {
                        let col = panel.col(c);
                        buf[c * r.len()..(c + 1) * r.len()].copy_from_slice(&col[r.clone()]);
                    }
                    flops += f.solve_in_place(&mut buf, q);
                    for c in 0..q {
                        let col = panel.col_mut(c);
                        col[r.clone()].copy_from_slice(&buf[c * r.len()..(c + 1) * r.len()]);
                    }
                }
            }
        }
        Ok(flops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::structured_pivot_permutation;
    use rand::{Rng, SeedableRng};

    fn identity_perms(n: usize) -> (Permutation, Permutation) {
        (Permutation::identity(n), Permutation::identity(n))
    }

    #[test]
    fn unit_lower_bidiagonal_forward_substitution() {
        // M = [[1, 0], [2, 1]], rhs = (3, 7)ᵀ → x = (3, 1)ᵀ.
        let m =
            SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 1.0), (1, 0, 2.0)]).unwrap();
        let s = BlockStructure::from_sizes(&[1, 1]).unwrap();
        let (pr, pc) = identity_perms(2);
        let f = bt_factorize(&m, &pr, &pc, &s).unwrap();
        assert!(f.all_identity_blocks());
        let x = f.solve_vec(&[3.0, 7.0]).unwrap();
        assert_eq!(x, vec![3.0, 1.0]);
    }

    #[test]
    fn two_layer_identity_block_system() {
        // M = [[I2, 0], [W, I2]] with W all-ones; rhs = (1,1,0,0)ᵀ.
        let mut t = vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)];
        for i in 0..2 {
            for j in 0..2 {
                t.push((2 + i, j, 1.0));
            }
        }
        let m = SparseMatrix::from_triplets(4, 4, t).unwrap();
        let mut s = BlockStructure::from_sizes(&[2, 2]).unwrap();
        s.set_tag(1, 0, OffDiagTag::Dense).unwrap();
        let (pr, pc) = identity_perms(4);
        let f = bt_factorize(&m, &pr, &pc, &s).unwrap();
        assert!(f.all_identity_blocks());
        assert_eq!(f.factor_flops(), 0);
        let x = f.solve_vec(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0, -2.0, -2.0]);
    }

    #[test]
    fn lower_bidiagonal_scalar_blocks() {
        // Non-unit diagonal: blocks are the diagonal entries themselves.
        let m = SparseMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 2.0),
                (1, 1, 4.0),
                (2, 2, 5.0),
                (1, 0, 1.0),
                (2, 1, 1.0),
            ],
        )
        .unwrap();
        let s = BlockStructure::from_sizes(&[1, 1, 1]).unwrap();
        let (pr, pc) = identity_perms(3);
        let f = bt_factorize(&m, &pr, &pc, &s).unwrap();
        // 2x = 2 → x0 = 1; 4y = 0 − 1·1 → y = −0.25; 5z = 0 − 1·(−0.25).
        let x = f.solve_vec(&[2.0, 0.0, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] + 0.25).abs() < 1e-15);
        assert!((x[2] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn structure_violation_detected() {
        let m =
            SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 1.0), (0, 1, 3.0)]).unwrap();
        let s = BlockStructure::from_sizes(&[1, 1]).unwrap();
        let (pr, pc) = identity_perms(2);
        match bt_factorize(&m, &pr, &pc, &s) {
            Err(Error::StructureViolation(_)) => {}
            other => panic!("expected structure violation, got {other:?}"),
        }
    }

    #[test]
    fn singular_block_reported_with_index() {
        let m =
            SparseMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 0, 1.0), (2, 2, 1.0)]).unwrap();
        let s = BlockStructure::from_sizes(&[1, 1, 1]).unwrap();
        let (pr, pc) = identity_perms(3);
        match bt_factorize(&m, &pr, &pc, &s) {
            Err(Error::SingularBlock { block, .. }) => assert_eq!(block, 1),
            other => panic!("expected singular block, got {other:?}"),
        }
    }

    /// Random block lower-triangular matrix with given block sizes; diagonal
    /// blocks made comfortably nonsingular.
    fn random_block_lower(
        sizes: &[usize],
        density: f64,
        rng: &mut impl Rng,
    ) -> (SparseMatrix, BlockStructure) {
        let s = BlockStructure::from_sizes(sizes).unwrap();
        let dim = s.dim();
        let mut t = Vec::new();
        for b in 0..s.num_blocks() {
            let r = s.block_range(b);
            for i in r.clone() {
                for j in r.clone() {
                    let v = if i == j {
                        rng.gen_range(2.0..3.0)
                    } else {
                        rng.gen_range(-0.5..0.5)
                    };
                    t.push((i, j, v));
                }
            }
        }
        for bi in 1..s.num_blocks() {
            for bj in 0..bi {
                for i in s.block_range(bi) {
                    for j in s.block_range(bj) {
                        if rng.gen_bool(density) {
                            t.push((i, j, rng.gen_range(-1.0..1.0)));
                        }
                    }
                }
            }
        }
        (SparseMatrix::from_triplets(dim, dim, t).unwrap(), s)
    }

    #[test]
    fn random_block_systems_have_tiny_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for trial in 0..30 {
            let nb = rng.gen_range(1..=5);
            let sizes: Vec<usize> = (0..nb).map(|_| rng.gen_range(1..=4)).collect();
            let (m, s) = random_block_lower(&sizes, 0.5, &mut rng);
            let (pr, pc) = identity_perms(s.dim());
            let f = bt_factorize(&m, &pr, &pc, &s).unwrap();
            let q = rng.gen_range(1..=5);
            let rhs = DenseMatrix::from_fn(s.dim(), q, |_, _| rng.gen_range(-1.0..1.0));
            let x = f.solve(&rhs).unwrap();
            for c in 0..q {
                let mx = m.spmv(x.col(c)).unwrap();
                for i in 0..s.dim() {
                    assert!(
                        (mx[i] - rhs.get(i, c)).abs() < 1e-12,
                        "trial {trial} col {c} row {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn three_dense_blocks_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let (m, s) = random_block_lower(&[4, 4, 4], 0.9, &mut rng);
        let (pr, pc) = identity_perms(12);
        let f = bt_factorize(&m, &pr, &pc, &s).unwrap();
        // Reconstruct M column by column: M x = e_k → x = M⁻¹ e_k, so
        // applying M to the solved identity gives back I to within 1e-12.
        let id = DenseMatrix::identity(12);
        let inv = f.solve(&id).unwrap();
        for k in 0..12 {
            let col = m.spmv(inv.col(k)).unwrap();
            for i in 0..12 {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((col[i] - want).abs() < 1e-12, "({i}, {k})");
            }
        }
    }

    #[test]
    fn zero_fill_invariant_and_storage_classes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let (m, mut s) = random_block_lower(&[3, 3, 2], 0.4, &mut rng);
        s.set_tag(1, 0, OffDiagTag::Dense).unwrap();
        let (pr, pc) = identity_perms(8);
        let f = bt_factorize(&m, &pr, &pc, &s).unwrap();
        let off_nnz_input = m
            .canonical_triples()
            .iter()
            .filter(|&&(i, j, _)| s.block_of(i) != s.block_of(j))
            .count();
        assert_eq!(f.off_diagonal_nnz(), off_nnz_input);
    }

    #[test]
    fn diagonal_tag_verified() {
        let mut t = vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)];
        t.push((2, 1, 5.0)); // off-diagonal within block (1, 0)
        let m = SparseMatrix::from_triplets(4, 4, t).unwrap();
        let mut s = BlockStructure::from_sizes(&[2, 2]).unwrap();
        s.set_tag(1, 0, OffDiagTag::Diagonal).unwrap();
        let (pr, pc) = identity_perms(4);
        match bt_factorize(&m, &pr, &pc, &s) {
            Err(Error::StructureViolation(_)) => {}
            other => panic!("expected diagonal-tag violation, got {other:?}"),
        }
    }

    #[test]
    fn permuted_solve_matches_unpermuted_system() {
        // Random saddle pivot matrix C = [[W, Jᵀ], [J, 0]] with lower
        // unit-triangular J: solve through the structured permutation and
        // check the residual against the ORIGINAL C.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        for trial in 0..20 {
            let n_y = rng.gen_range(2..=8);
            let mut t = Vec::new();
            for i in 0..n_y {
                for j in 0..=i {
                    let jv = if i == j {
                        1.0
                    } else {
                        rng.gen_range(-1.0..1.0)
                    };
                    if i == j || rng.gen_bool(0.5) {
                        t.push((n_y + i, j, jv));
                        t.push((j, n_y + i, jv));
                    }
                }
            }
            for i in 0..n_y {
                for j in 0..=i {
                    if rng.gen_bool(0.4) {
                        let v = rng.gen_range(-1.0..1.0);
                        t.push((i, j, v));
                        if i != j {
                            t.push((j, i, v));
                        }
                    }
                }
            }
            let c = SparseMatrix::from_triplets(2 * n_y, 2 * n_y, t).unwrap();
            let (pr, pc) = structured_pivot_permutation(n_y);
            let s = BlockStructure::from_sizes(&vec![1; 2 * n_y]).unwrap();
            let f = bt_factorize(&c, &pr, &pc, &s).unwrap();
            let rhs: Vec<f64> = (0..2 * n_y).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = f.solve_vec(&rhs).unwrap();
            let cx = c.spmv(&x).unwrap();
            for i in 0..2 * n_y {
                assert!((cx[i] - rhs[i]).abs() < 1e-10, "trial {trial} row {i}");
            }
        }
    }

    #[test]
    fn dense_block_solve_flops_are_exact() {
        // One dense 3x2 off-diagonal block, identity diagonals, 5 RHS
        // columns: solve FLOPs must be exactly 2·3·2·5 = 60.
        let mut t = Vec::new();
        for i in 0..5 {
            t.push((i, i, 1.0));
        }
        for i in 0..3 {
            for j in 0..2 {
                t.push((2 + i, j, (i + j + 1) as f64));
            }
        }
        let m = SparseMatrix::from_triplets(5, 5, t).unwrap();
        let mut s = BlockStructure::from_sizes(&[2, 3]).unwrap();
        s.set_tag(1, 0, OffDiagTag::Dense).unwrap();
        let (pr, pc) = identity_perms(5);
        let f = bt_factorize(&m, &pr, &pc, &s).unwrap();
        let rhs = DenseMatrix::from_fn(5, 5, |i, j| (i * 5 + j) as f64);
        f.solve(&rhs).unwrap();
        assert_eq!(f.solve_flops(), 60);
    }
}
