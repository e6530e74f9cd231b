//! Report building blocks shared by the solve and bench commands.

use btkkt::baseline::BaselineFactors;
use btkkt::generator::KKTSystem;
use btkkt::schur::residual_max_norm;
use btkkt::{Result, SymmetricSparse};
use serde::{Deserialize, Serialize};

/// Dimensions of the three matrices the method touches.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Dims {
    /// Assembled KKT matrix.
    pub matrix: usize,
    /// Pivot block `C` (twice the intermediate-variable count).
    pub pivot: usize,
    /// Schur complement (equals the `A` block).
    pub schur: usize,
}

/// Stored nonzeros per block; symmetric blocks count the lower triangle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockNnz {
    pub a: usize,
    pub b: usize,
    pub w_yy: usize,
    pub j: usize,
    pub full: usize,
}

/// Factorization FLOPs split by phase.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseFlops {
    pub factor_pivot: u64,
    pub build_schur: u64,
    pub factor_schur: u64,
    pub total: u64,
}

pub fn dims_of(sys: &KKTSystem) -> Dims {
    Dims {
        matrix: sys.dim(),
        pivot: sys.n_c(),
        schur: sys.n_a(),
    }
}

pub fn block_nnz_of(sys: &KKTSystem, full: &SymmetricSparse) -> BlockNnz {
    BlockNnz {
        a: sys.a.nnz_lower(),
        b: sys.b.nnz(),
        w_yy: sys.w_yy.nnz_lower(),
        j: sys.j.nnz(),
        full: full.nnz_lower(),
    }
}

/// Result of a baseline direct solve driven to tolerance by refinement.
pub struct RefinedBaseline {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub solve_flops: u64,
}

/// Iterative refinement around the baseline factors, mirroring the refined
/// structured solve: correction solves until the max-norm residual against
/// the assembled matrix drops below `tol`.
pub fn baseline_solve_refined(
    f: &BaselineFactors,
    full: &SymmetricSparse,
    rhs: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<RefinedBaseline> {
    let (mut x, mut solve_flops) = f.solve_vec(rhs)?;
    let mut iterations = 0;
    let mut residual = residual_max_norm(full, &x, rhs)?;
    while residual > tol && iterations < max_iters {
        let mx = full.matvec(&x)?;
        let res: Vec<f64> = rhs.iter().zip(&mx).map(|(ri, mi)| ri - mi).collect();
        let (dx, fl) = f.solve_vec(&res)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        solve_flops += fl;
        iterations += 1;
        residual = residual_max_norm(full, &x, rhs)?;
    }
    Ok(RefinedBaseline {
        converged: residual <= tol,
        residual,
        iterations,
        solve_flops,
        x,
    })
}

/// Max-norm difference between two vectors, relative to the first one's
/// max-norm.
pub fn relative_max_diff(reference: &[f64], other: &[f64]) -> f64 {
    let scale = reference
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    reference
        .iter()
        .zip(other)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Median of timing samples in seconds.
pub fn median_seconds(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}
