//! Symbolic fill prediction for 1x1 and 2x2 pivots on symmetric patterns.
//!
//! Everything here is structural: entries are treated as generic values and
//! the question is where a single elimination step *can* create nonzeros.
//! The one place this differs from naive boolean elimination is the 2x2
//! pivot: its inverse is the adjugate `[[f, -e], [-e, d]] / det`, so when the
//! trailing pivot diagonal `f` is structurally zero, the `u_i f u_j` term of
//! the update vanishes identically — a structurally forced cancellation that
//! boolean two-step elimination overcounts. The numeric oracles in the tests
//! pin this down.

use std::collections::BTreeSet;

use crate::block::BlockStructure;
use crate::error::{Error, Result};
use crate::sparse::SymmetricSparse;

/// Outcome of a symbolic single-pivot elimination.
#[derive(Debug, Clone)]
pub struct FillReport {
    /// Nonzero count of the full (mirrored) input pattern.
    pub input_nnz: usize,
    /// Predicted fill positions over the full pattern; symmetric, disjoint
    /// from the input pattern, and never in the pivot rows/columns.
    pub fill: BTreeSet<(usize, usize)>,
    /// Fill entries whose row and column fall in the same diagonal block.
    pub inside_diagonal_blocks: usize,
    /// Fill entries crossing diagonal blocks.
    pub outside_diagonal_blocks: usize,
}

impl FillReport {
    fn new(
        input: &BTreeSet<(usize, usize)>,
        fill: BTreeSet<(usize, usize)>,
        structure: &BlockStructure,
    ) -> Self {
        let mut inside = 0;
        let mut outside = 0;
        for &(i, j) in &fill {
            if structure.block_of(i) == structure.block_of(j) {
                inside += 1;
            } else {
                outside += 1;
            }
        }
        FillReport {
            input_nnz: input.len(),
            fill,
            inside_diagonal_blocks: inside,
            outside_diagonal_blocks: outside,
        }
    }

    pub fn fill_count(&self) -> usize {
        self.fill.len()
    }

    /// True if some fill entry has its row or column in `range`.
    pub fn touches(&self, range: std::ops::Range<usize>) -> bool {
        self.fill
            .iter()
            .any(|&(i, j)| range.contains(&i) || range.contains(&j))
    }
}

fn full_pattern(m: &SymmetricSparse) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for &(i, j, _) in m.canonical() {
        set.insert((i, j));
        set.insert((j, i));
    }
    set
}

/// Fill created by eliminating the single pivot `pivot`: the outer product of
/// the pivot row's pattern with itself, minus existing entries.
pub fn symbolic_fill_1x1(
    m: &SymmetricSparse,
    pivot: usize,
    structure: &BlockStructure,
) -> Result<FillReport> {
    if pivot >= m.dim() {
        return Err(Error::InvalidParameter(format!(
            "pivot {pivot} out of range for dim {}",
            m.dim()
        )));
    }
    let pat = full_pattern(m);
    if !pat.contains(&(pivot, pivot)) {
        return Err(Error::InvalidPivot(format!(
            "diagonal entry ({pivot}, {pivot}) is structurally zero"
        )));
    }
    let u: Vec<usize> = (0..m.dim())
        .filter(|&i| i != pivot && pat.contains(&(i, pivot)))
        .collect();
    let mut fill = BTreeSet::new();
    for &i in &u {
        for &j in &u {
            if !pat.contains(&(i, j)) {
                fill.insert((i, j));
            }
        }
    }
    Ok(FillReport::new(&pat, fill, structure))
}

/// Fill created by eliminating the 2x2 pivot on rows/columns `(p, q)`.
///
/// The pivot block is `[[d, e], [e, f]]` with `d = pat(p,p)`, `e = pat(p,q)`,
/// `f = pat(q,q)`; `e` must be structurally nonzero. The update pattern for a
/// trailing pair `(i, j)` follows the adjugate expansion
/// `u_i f u_j − u_i e v_j − v_i e u_j + v_i d v_j`, so terms gated by `d` or
/// `f` contribute only when those diagonals are structurally present.
pub fn symbolic_fill_2x2(
    m: &SymmetricSparse,
    pivot_pair: (usize, usize),
    structure: &BlockStructure,
) -> Result<FillReport> {
    let (p, q) = pivot_pair;
    if p >= m.dim() || q >= m.dim() || p == q {
        return Err(Error::InvalidParameter(format!(
            "invalid pivot pair ({p}, {q}) for dim {}",
            m.dim()
        )));
    }
    let pat = full_pattern(m);
    if !pat.contains(&(p, q)) {
        return Err(Error::InvalidPivot(format!(
            "coupling entry ({p}, {q}) is structurally zero"
        )));
    }
    let d = pat.contains(&(p, p));
    let f = pat.contains(&(q, q));
    let mut fill = BTreeSet::new();
    let others: Vec<usize> = (0..m.dim()).filter(|&i| i != p && i != q).collect();
    for &i in &others {
        let ui = pat.contains(&(i, p));
        let vi = pat.contains(&(i, q));
        if !ui && !vi {
            continue;
        }
        for &j in &others {
            let uj = pat.contains(&(j, p));
            let vj = pat.contains(&(j, q));
            let present = (ui && f && uj) || (ui && vj) || (vi && uj) || (vi && d && vj);
            if present && !pat.contains(&(i, j)) {
                fill.insert((i, j));
            }
        }
    }
    Ok(FillReport::new(&pat, fill, structure))
}

/// Test pattern for pivot-fill analysis: a saddle matrix `[[D, Eᵀ], [E, 0]]`
/// of dimension `4s`, where `E` is block upper triangular with two `s × s`
/// diagonal blocks.
///
/// Index layout: `D` occupies `0..2s` with the scalar `d`-corner at 0, its
/// first trailing group at `1..s`, second at `s..2s`; the rows of `E` occupy
/// `2s..4s` with the scalar `e`-corner row at `2s`, first group rows at
/// `2s+1..3s`, and second group rows at `3s..4s` (whose only entries are the
/// final diagonal block of `E`).
///
/// With `dense_interior`, every structurally present block is fully dense.
/// Otherwise the trailing groups of `D` keep only their diagonals, the first
/// trailing group of `E` is diagonal, and the off-diagonal coupling between
/// `E`'s first group rows and `D`'s second group is dropped — leaving room
/// for elimination fill inside those blocks.
pub fn two_block_saddle_pattern(s: usize, dense_interior: bool) -> SymmetricSparse {
    assert!(
        s >= 2,
        "need at least a scalar corner plus one trailing row"
    );
    let n = 2 * s;
    let dim = 4 * s;
    let mut t: Vec<(usize, usize, f64)> = Vec::new();
    let mut put = |i: usize, j: usize| {
        if i >= j {
            t.push((i, j, 1.0));
        } else {
            t.push((j, i, 1.0));
        }
    };

    // D block: scalar corner, dense coupling column, trailing groups.
    put(0, 0);
    for i in 1..n {
        put(i, 0); // D21 and D31: dense
    }
    for i in 1..s {
        for j in 1..=i {
            if dense_interior || i == j {
                put(i, j); // D22
            }
        }
    }
    for i in s..n {
        for j in s..=i {
            if dense_interior || i == j {
                put(i, j); // D33
            }
        }
    }
    if dense_interior {
        for i in s..n {
            for j in 1..s {
                put(i, j); // D32
            }
        }
    }

    // E block (rows offset by n): block upper triangular.
    put(n, 0); // e-corner
    for j in 1..s {
        put(n, j); // E12
    }
    for j in s..n {
        put(n, j); // E13
    }
    for i in 1..s {
        put(n + i, 0); // E21
        for j in 1..s {
            if dense_interior || i == j {
                put(n + i, j); // E22
            }
        }
        if dense_interior {
            for j in s..n {
                put(n + i, j); // E23
            }
        }
    }
    for i in s..n {
        for j in s..n {
            put(n + i, j); // E33: dense
        }
    }

    SymmetricSparse::from_triplets(dim, t).unwrap()
}

/// Block partition matching [`two_block_saddle_pattern`]'s index layout:
/// `{d-corner}, {D group 1}, {D group 2}, {e-corner row}, {E group-1 rows},
/// {E group-2 rows}` — the last block is the one elimination must not touch.
pub fn two_block_saddle_partition(s: usize) -> BlockStructure {
    BlockStructure::from_sizes(&[1, s - 1, s, 1, s - 1, s]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Numeric elimination oracle: instantiate the pattern with generic
    /// values, eliminate the pivot set, and report where new entries appear.
    /// Two independent draws are unioned so an unlucky numerical coincidence
    /// cannot hide a structurally present fill entry.
    fn numeric_fill_oracle(
        m: &SymmetricSparse,
        pivots: &[usize],
        rng: &mut impl Rng,
    ) -> BTreeSet<(usize, usize)> {
        let dim = m.dim();
        let pat = full_pattern(m);
        let mut union = BTreeSet::new();
        for _ in 0..2 {
            let mut a = vec![vec![0.0_f64; dim]; dim];
            for &(i, j, _) in m.canonical() {
                // Keep the pivot coupling large so the 2x2 block is never
                // accidentally near-singular under generic values.
                let v = if pivots.len() == 2
                    && ((i, j) == (pivots[1], pivots[0]) || (i, j) == (pivots[0], pivots[1]))
                {
                    rng.gen_range(3.0..4.0)
                } else {
                    rng.gen_range(1.0..2.0)
                };
                a[i][j] = v;
                a[j][i] = v;
            }
            let others: Vec<usize> = (0..dim).filter(|i| !pivots.contains(i)).collect();
            let mut max_abs = 0.0_f64;
            for r in &a {
                for &v in r {
                    max_abs = max_abs.max(v.abs());
                }
            }
            let tol = 1e-9 * max_abs;

            let updated: Vec<Vec<f64>> = match pivots {
                [p] => {
                    let d = a[*p][*p];
                    others
                        .iter()
                        .map(|&i| {
                            others
                                .iter()
                                .map(|&j| a[i][j] - a[i][*p] * a[*p][j] / d)
                                .collect()
                        })
                        .collect()
                }
                [p, q] => {
                    let (d, e, f) = (a[*p][*p], a[*p][*q], a[*q][*q]);
                    let det = d * f - e * e;
                    others
                        .iter()
                        .map(|&i| {
                            let (ui, vi) = (a[i][*p], a[i][*q]);
                            others
                                .iter()
                                .map(|&j| {
                                    let (uj, vj) = (a[j][*p], a[j][*q]);
                                    a[i][j]
                                        - (ui * f * uj - ui * e * vj - vi * e * uj + vi * d * vj)
                                            / det
                                })
                                .collect()
                        })
                        .collect()
                }
                _ => unreachable!(),
            };
            for (oi, &i) in others.iter().enumerate() {
                for (oj, &j) in others.iter().enumerate() {
                    if !pat.contains(&(i, j)) && updated[oi][oj].abs() > tol {
                        union.insert((i, j));
                    }
                }
            }
        }
        union
    }

    fn sym_pattern(dim: usize, entries: &[(usize, usize)]) -> SymmetricSparse {
        SymmetricSparse::from_triplets(
            dim,
            entries
                .iter()
                .map(|&(i, j)| if i >= j { (i, j, 1.0) } else { (j, i, 1.0) })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_pattern_has_no_fill() {
        let m = sym_pattern(5, &[(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)]);
        let s = BlockStructure::single_block(5);
        for p in 0..5 {
            let r = symbolic_fill_1x1(&m, p, &s).unwrap();
            assert_eq!(r.fill_count(), 0);
        }
    }

    #[test]
    fn arrowhead_corner_pivot_fills_everything() {
        // Dense last row/column, diagonal elsewhere; pivot on the corner.
        let m = sym_pattern(4, &[(0, 0), (1, 1), (2, 2), (3, 3), (3, 0), (3, 1), (3, 2)]);
        let s = BlockStructure::single_block(4);
        let r = symbolic_fill_1x1(&m, 3, &s).unwrap();
        // Remaining 3x3 becomes fully dense: 6 new off-diagonal positions.
        assert_eq!(r.fill_count(), 6);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(r.fill.contains(&(i, j)));
                }
            }
        }
    }

    #[test]
    fn structurally_zero_pivots_rejected() {
        let m = sym_pattern(3, &[(0, 0), (1, 0), (2, 2)]);
        let s = BlockStructure::single_block(3);
        match symbolic_fill_1x1(&m, 1, &s) {
            Err(Error::InvalidPivot(_)) => {}
            other => panic!("expected invalid pivot, got {other:?}"),
        }
        match symbolic_fill_2x2(&m, (0, 2), &s) {
            Err(Error::InvalidPivot(_)) => {}
            other => panic!("expected invalid pivot, got {other:?}"),
        }
    }

    #[test]
    fn fill_disjoint_from_input_and_symmetric() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let dim = rng.gen_range(3..=12);
            let mut entries: Vec<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
            for i in 0..dim {
                for j in 0..i {
                    if rng.gen_bool(0.3) {
                        entries.push((i, j));
                    }
                }
            }
            let m = sym_pattern(dim, &entries);
            let s = BlockStructure::single_block(dim);
            let pat = full_pattern(&m);
            let p = rng.gen_range(0..dim);
            let r = symbolic_fill_1x1(&m, p, &s).unwrap();
            for &(i, j) in &r.fill {
                assert!(!pat.contains(&(i, j)));
                assert!(r.fill.contains(&(j, i)), "fill not symmetric");
                assert!(i != p && j != p, "fill in eliminated row/column");
            }
        }
    }

    #[test]
    fn one_by_one_matches_numeric_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for trial in 0..80 {
            let dim = rng.gen_range(2..=12);
            let mut entries: Vec<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
            for i in 0..dim {
                for j in 0..i {
                    if rng.gen_bool(0.35) {
                        entries.push((i, j));
                    }
                }
            }
            let m = sym_pattern(dim, &entries);
            let s = BlockStructure::single_block(dim);
            let p = rng.gen_range(0..dim);
            let predicted = symbolic_fill_1x1(&m, p, &s).unwrap().fill;
            let oracle = numeric_fill_oracle(&m, &[p], &mut rng);
            assert_eq!(predicted, oracle, "trial {trial}, dim {dim}, pivot {p}");
        }
    }

    #[test]
    fn two_by_two_matches_numeric_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let mut ran = 0;
        for trial in 0..200 {
            let dim = rng.gen_range(3..=12);
            let mut entries: Vec<(usize, usize)> = Vec::new();
            for i in 0..dim {
                for j in 0..=i {
                    // Sparser diagonal so the f-absent case is exercised.
                    let prob = if i == j { 0.5 } else { 0.35 };
                    if rng.gen_bool(prob) {
                        entries.push((i, j));
                    }
                }
            }
            let m = sym_pattern(dim, &entries);
            let pat = full_pattern(&m);
            let p = rng.gen_range(0..dim);
            let q = rng.gen_range(0..dim);
            if p == q || !pat.contains(&(p, q)) {
                continue;
            }
            let s = BlockStructure::single_block(dim);
            let predicted = symbolic_fill_2x2(&m, (p, q), &s).unwrap().fill;
            let oracle = numeric_fill_oracle(&m, &[p, q], &mut rng);
            assert_eq!(
                predicted, oracle,
                "trial {trial}, dim {dim}, pair ({p},{q})"
            );
            ran += 1;
        }
        assert!(ran >= 40, "ran only {ran} valid pivot pairs");
    }

    #[test]
    fn naive_boolean_two_step_overcounts_when_trailing_diagonal_absent() {
        // Pattern: p=0, q=1 coupled, f = pat(1,1) absent; rows 2 and 3 touch
        // only column 0. Boolean two-step elimination (0 then 1) predicts
        // (2,3) fill from the u_i u_j outer product, but the true update is
        // gated by f and vanishes identically.
        let m = sym_pattern(4, &[(0, 0), (1, 0), (2, 0), (3, 0), (2, 2), (3, 3)]);
        let s = BlockStructure::single_block(4);
        let predicted = symbolic_fill_2x2(&m, (0, 1), &s).unwrap().fill;
        assert!(!predicted.contains(&(2, 3)), "u-u term must be gated by f");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let oracle = numeric_fill_oracle(&m, &[0, 1], &mut rng);
        assert_eq!(predicted, oracle);
    }

    #[test]
    fn saddle_fixture_one_by_one_avoids_last_group_only() {
        for s in [2usize, 3] {
            for dense in [true, false] {
                let m = two_block_saddle_pattern(s, dense);
                let part = two_block_saddle_partition(s);
                let r = symbolic_fill_1x1(&m, 0, &part).unwrap();
                assert!(r.fill_count() > 0, "s={s} dense={dense}: no fill at all");
                // Fill never touches the final E group rows (3s..4s) nor the
                // matching columns.
                assert!(
                    !r.touches(3 * s..4 * s),
                    "s={s} dense={dense}: fill reached the last block row/col"
                );
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100 + s as u64);
                let oracle = numeric_fill_oracle(&m, &[0], &mut rng);
                assert_eq!(r.fill, oracle, "s={s} dense={dense}");
            }
        }
    }

    #[test]
    fn saddle_fixture_two_by_two_fill_confined_but_escapes_diagonal_blocks() {
        for s in [2usize, 3] {
            let m = two_block_saddle_pattern(s, false);
            let part = two_block_saddle_partition(s);
            let n = 2 * s;
            let r = symbolic_fill_2x2(&m, (0, n), &part).unwrap();
            assert!(r.fill_count() > 0);

            // Allowed regions: D group-1/group-2 interior, E group-1 rows
            // against D columns, and their transposes. Never the e-corner
            // row, never the last E group.
            let in_d = |i: usize| (1..n).contains(&i);
            let in_e2 = |i: usize| (n + 1..n + s).contains(&i);
            for &(i, j) in &r.fill {
                let ok = (in_d(i) && in_d(j)) || (in_e2(i) && in_d(j)) || (in_d(i) && in_e2(j));
                assert!(
                    ok,
                    "s={s}: fill at ({i}, {j}) outside the allowed block set"
                );
            }
            // The coupling block between E group-1 rows and D group 2 (the
            // off-diagonal region a block-triangular scheme keeps clean) does
            // receive fill.
            let escaped = r.fill.iter().any(|&(i, j)| in_e2(i) && (s..n).contains(&j));
            assert!(escaped, "s={s}: expected fill outside the diagonal blocks");
            assert!(r.outside_diagonal_blocks > 0);

            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(200 + s as u64);
            let oracle = numeric_fill_oracle(&m, &[0, n], &mut rng);
            assert_eq!(r.fill, oracle, "s={s}");
        }
    }
}
