//! Schur-complement solver for saddle systems with a block-triangular pivot.
//!
//! The system is `M = [[A, Bᵀ], [B, C]]` with `C = [[W_yy, Jᵀ], [J, 0]]` and
//! `J` square, nonsingular, and block lower triangular. `C` is never
//! factorized numerically: the structured permutation turns it into a
//! block-triangular matrix that back-substitution solves directly. Only the
//! small Schur complement `S = A − Bᵀ C⁻¹ B` sees a symmetric-indefinite
//! factorization, and because the pivot contributes inertia `(n_y, n_y, 0)`
//! exactly, the inertia of the whole matrix is available from `S` alone.

use crate::block::{pivot_block_structure, structured_pivot_permutation, BlockStructure};
use crate::blocktri::{bt_factorize, BtFactors};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::ldlt::{bunch_kaufman_dense, Inertia, LbltFactors};
use crate::sparse::{SparseMatrix, SymmetricSparse};

/// Relative asymmetry of the computed Schur complement that is considered
/// healthy; larger values indicate an inconsistent pivot solve.
pub const ASYMMETRY_REL_TOL: f64 = 1e-12;

/// Default max-norm residual target for refined solves.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-5;
/// Default refinement iteration cap.
pub const DEFAULT_MAX_REFINE: usize = 10;

/// Factorization of `[[A, Bᵀ], [B, C]]` by elimination of the pivot block.
#[derive(Debug)]
pub struct SchurFactors {
    bt: BtFactors,
    b: SparseMatrix,
    b_cols: Vec<usize>,
    s: DenseMatrix,
    s_factors: LbltFactors,
    n_a: usize,
    n_y: usize,
    max_asymmetry: f64,
    factorize_c_flops: u64,
    build_s_flops: u64,
    factorize_s_flops: u64,
}

/// Assembles `C = [[W_yy, Jᵀ], [J, 0]]` as a general sparse matrix.
pub fn assemble_pivot_matrix(w_yy: &SymmetricSparse, j: &SparseMatrix) -> Result<SparseMatrix> {
    let n_y = w_yy.dim();
    if j.nrows() != n_y || j.ncols() != n_y {
        return Err(Error::DimensionMismatch(format!(
            "J is {}x{} but W_yy has dimension {n_y}",
            j.nrows(),
            j.ncols()
        )));
    }
    let mut t: Vec<(usize, usize, f64)> = Vec::new();
    for &(i, jc, v) in w_yy.canonical() {
        t.push((i, jc, v));
        if i != jc {
            t.push((jc, i, v));
        }
    }
    for (r, c, v) in j.canonical_triples() {
        t.push((n_y + r, c, v));
        t.push((c, n_y + r, v));
    }
    SparseMatrix::from_triplets(2 * n_y, 2 * n_y, t)
}

/// Factorizes the saddle system given its four blocks.
///
/// The pivot matrix is brought to block-triangular form by the structured
/// permutation and factorized block-wise; the Schur complement is built by a
/// multi-right-hand-side solve restricted to the nonzero columns of `B`,
/// symmetrized, and factorized densely. A structurally singular `J` or a
/// singular Schur complement is reported as an error.
pub fn schur_factorize(
    a: &SymmetricSparse,
    b: &SparseMatrix,
    w_yy: &SymmetricSparse,
    j: &SparseMatrix,
    j_structure: &BlockStructure,
) -> Result<SchurFactors> {
    let n_a = a.dim();
    let n_y = w_yy.dim();
    let n_c = 2 * n_y;
    if j_structure.dim() != n_y {
        return Err(Error::DimensionMismatch(format!(
            "J structure covers {} rows, J has {n_y}",
            j_structure.dim()
        )));
    }
    if b.nrows() != n_c || b.ncols() != n_a {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, expected {n_c}x{n_a}",
            b.nrows(),
            b.ncols()
        )));
    }

    let matching = crate::btf::maximum_matching(j)?;
    if !matching.is_perfect() {
        return Err(Error::StructurallySingular(format!(
            "J has structural rank {} < {n_y}",
            matching.size
        )));
    }

    // Phase 1: block-triangular factorization of the permuted pivot matrix.
    let c = assemble_pivot_matrix(w_yy, j)?;
    let (p_row, p_col) = structured_pivot_permutation(n_y);
    let structure = pivot_block_structure(j_structure);
    let bt = bt_factorize(&c, &p_row, &p_col, &structure)?;
    let factorize_c_flops = bt.factor_flops();

    // Phase 2: S = A − Bᵀ C⁻¹ B, touching only B's nonzero columns.
    let mut s = a.to_dense();
    let b_cols = b.nonzero_cols();
    let k = b_cols.len();
    let mut build_s_flops = 0u64;
    if k > 0 {
        let csc = b.csc();
        let mut rhs = DenseMatrix::zeros(n_c, k);
        for (jl, &jc) in b_cols.iter().enumerate() {
            let (rows, vals) = csc.col(jc);
            for (&r, &v) in rows.iter().zip(vals) {
                rhs.add_to(r, jl, v);
            }
        }
        let solve_start = bt.solve_flops();
        let x = bt.solve(&rhs)?;
        build_s_flops += bt.solve_flops() - solve_start;

        // D = B_colsᵀ X is k×k; scatter its negation into S.
        let mut d = DenseMatrix::zeros(k, k);
        for (il, &ic) in b_cols.iter().enumerate() {
            let (rows, vals) = csc.col(ic);
            for (&r, &v) in rows.iter().zip(vals) {
                for jl in 0..k {
                    d.add_to(il, jl, v * x.get(r, jl));
                }
            }
        }
        build_s_flops += 2 * (b.nnz() as u64) * (k as u64);
        for il in 0..k {
            for jl in 0..k {
                s.add_to(b_cols[il], b_cols[jl], -d.get(il, jl));
            }
        }
        build_s_flops += (k * k) as u64;
    }
    let max_asymmetry = s.max_asymmetry();
    s.symmetrize();

    // Phase 3: dense symmetric-indefinite factorization of S.
    let s_factors = bunch_kaufman_dense(&s)?;
    if s_factors.inertia().zero > 0 {
        return Err(Error::Singular(format!(
            "Schur complement is singular: {} zero pivots",
            s_factors.inertia().zero
        )));
    }
    let factorize_s_flops = s_factors.factor_flops();

    Ok(SchurFactors {
        bt,
        b: b.to_compressed(),
        b_cols,
        s,
        s_factors,
        n_a,
        n_y,
        max_asymmetry,
        factorize_c_flops,
        build_s_flops,
        factorize_s_flops,
    })
}

impl SchurFactors {
    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_c(&self) -> usize {
        2 * self.n_y
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn dim(&self) -> usize {
        self.n_a + self.n_c()
    }

    /// The symmetrized Schur complement.
    pub fn schur_matrix(&self) -> &DenseMatrix {
        &self.s
    }

    pub fn schur_factors(&self) -> &LbltFactors {
        &self.s_factors
    }

    pub fn bt(&self) -> &BtFactors {
        &self.bt
    }

    /// Columns of `B` that carry any entries (the linking variables).
    pub fn b_nonzero_cols(&self) -> &[usize] {
        &self.b_cols
    }

    /// `|S − Sᵀ|_max` observed before symmetrization.
    pub fn max_asymmetry(&self) -> f64 {
        self.max_asymmetry
    }

    pub fn factorize_c_flops(&self) -> u64 {
        self.factorize_c_flops
    }

    pub fn build_s_flops(&self) -> u64 {
        self.build_s_flops
    }

    pub fn factorize_s_flops(&self) -> u64 {
        self.factorize_s_flops
    }

    pub fn factor_flops(&self) -> u64 {
        self.factorize_c_flops + self.build_s_flops + self.factorize_s_flops
    }

    /// Stored factor entries: block-triangular factors of `C`, dense factors
    /// of `S`, and the coupling block reused at solve time.
    pub fn total_factor_nnz(&self) -> usize {
        self.bt.factor_nnz() + self.s_factors.factor_nnz() + self.b.nnz()
    }

    /// Test hook: symmetrically perturb one entry of `S` and refactorize it,
    /// leaving the pivot factors untouched. Used to exercise refinement.
    pub fn perturb_schur_entry(&mut self, i: usize, j: usize, delta: f64) -> Result<()> {
        if i >= self.n_a || j >= self.n_a {
            return Err(Error::IndexOutOfBounds {
                row: i,
                col: j,
                nrows: self.n_a,
                ncols: self.n_a,
            });
        }
        self.s.add_to(i, j, delta);
        if i != j {
            self.s.add_to(j, i, delta);
        }
        self.s_factors = bunch_kaufman_dense(&self.s)?;
        if self.s_factors.inertia().zero > 0 {
            return Err(Error::Singular(
                "perturbed Schur complement is singular".into(),
            ));
        }
        Ok(())
    }
}

/// Solves `M x = r` through the factorization: eliminate, solve the Schur
/// system, back-substitute the pivot block.
pub fn schur_solve(f: &SchurFactors, r: &[f64]) -> Result<Vec<f64>> {
    let n_a = f.n_a;
    let n_c = f.n_c();
    if r.len() != n_a + n_c {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, system dimension is {}",
            r.len(),
            n_a + n_c
        )));
    }
    let (r_a, r_c) = r.split_at(n_a);

    // r_S = r_A − Bᵀ C⁻¹ r_C
    let t = f.bt.solve_vec(r_c)?;
    let bt_t = f.b.spmv_t(&t)?;
    let r_s: Vec<f64> = r_a.iter().zip(&bt_t).map(|(ra, c)| ra - c).collect();

    let (x_a, _) = f.s_factors.solve_vec(&r_s);

    // x_C = C⁻¹ (r_C − B x_A)
    let bx = f.b.spmv(&x_a)?;
    let u: Vec<f64> = r_c.iter().zip(&bx).map(|(rc, c)| rc - c).collect();
    let x_c = f.bt.solve_vec(&u)?;

    let mut x = x_a;
    x.extend_from_slice(&x_c);
    Ok(x)
}

/// Inertia of the full matrix without factorizing `C`: the pivot block
/// contributes `(n_y, n_y, 0)` a priori, the rest comes from `S`.
pub fn schur_inertia(f: &SchurFactors) -> Inertia {
    Inertia {
        positive: f.n_y,
        negative: f.n_y,
        zero: 0,
    }
    .add(f.s_factors.inertia())
}

/// True when the inertia matches the optimality target `(n, m, 0)` for `n`
/// variables and `m` equality constraints.
pub fn check_inertia_target(inertia: Inertia, n_vars: usize, n_cons: usize) -> bool {
    inertia.positive == n_vars && inertia.negative == n_cons && inertia.zero == 0
}

/// Outcome of a refined solve.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Max-norm of `r − M x` against the full assembled matrix.
    pub residual_norm: f64,
    /// Correction solves performed.
    pub iterations: usize,
    pub converged: bool,
    pub inertia: Inertia,
    /// Wall-clock seconds spent in solves and residual evaluations.
    pub seconds: f64,
}

/// Solves with iterative refinement against the full assembled matrix.
/// Failure to reach `tol` within `max_iters` corrections is reported in the
/// flags, not as an error.
pub fn solve_refined(
    f: &SchurFactors,
    full: &SymmetricSparse,
    r: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    if full.dim() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "full matrix has dimension {}, factors have {}",
            full.dim(),
            f.dim()
        )));
    }
    let started = std::time::Instant::now();
    let mut x = schur_solve(f, r)?;
    let mut iterations = 0;
    let mut residual_norm = residual_max_norm(full, &x, r)?;
    while residual_norm > tol && iterations < max_iters {
        let mx = full.matvec(&x)?;
        let res: Vec<f64> = r.iter().zip(&mx).map(|(ri, mi)| ri - mi).collect();
        let dx = schur_solve(f, &res)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        iterations += 1;
        residual_norm = residual_max_norm(full, &x, r)?;
    }
    Ok(SolveReport {
        converged: residual_norm <= tol,
        residual_norm,
        iterations,
        inertia: schur_inertia(f),
        seconds: started.elapsed().as_secs_f64(),
        x,
    })
}

/// Max-norm of `r − M x`.
pub fn residual_max_norm(m: &SymmetricSparse, x: &[f64], r: &[f64]) -> Result<f64> {
    let mx = m.matvec(x)?;
    Ok(r.iter()
        .zip(&mx)
        .map(|(ri, mi)| (ri - mi).abs())
        .fold(0.0, f64::max))
}
