//! Cyclic Jacobi eigenvalue iteration, used as an independent oracle for
//! inertia computations.
//!
//! This is deliberately the *slow, trustworthy* path: it never factorizes,
//! pivots, or exploits structure, so its eigenvalue sign counts make a fair
//! referee for the factorization-based inertia elsewhere in the crate.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::ldlt::Inertia;
use crate::sparse::SymmetricSparse;

/// Relative off-diagonal Frobenius norm at which the sweep stops.
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Sweep budget before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative threshold for calling an eigenvalue zero when counting inertia.
pub const EIGENVALUE_ZERO_REL_TOL: f64 = 1e-9;

/// Eigenvalues of a symmetric matrix via cyclic Jacobi sweeps, ascending.
/// Only the lower triangle of `m` is read.
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobi requires a square matrix, got {} x {}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let mut a = DenseMatrix::from_fn(n, n, |i, j| if i >= j { m.get(i, j) } else { m.get(j, i) });

    let mut frob = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            frob += a.get(i, j) * a.get(i, j);
        }
    }
    frob = frob.sqrt();
    let tol = JACOBI_REL_TOL * frob;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0_f64;
        for j in 0..n {
            for i in (j + 1)..n {
                off += 2.0 * a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= tol {
            let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Apply the rotation J(p, q, theta) on both sides.
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a.set(k, p, new_kp);
                    a.set(p, k, new_kp);
                    a.set(k, q, new_kq);
                    a.set(q, k, new_kq);
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Inertia of a symmetric sparse matrix by full eigenvalue computation.
/// Eigenvalues within `1e-9 * max|M|` of zero count as zero.
pub fn inertia_oracle(m: &SymmetricSparse) -> Result<Inertia> {
    inertia_oracle_dense(&m.to_dense())
}

/// Dense-input variant of [`inertia_oracle`].
pub fn inertia_oracle_dense(m: &DenseMatrix) -> Result<Inertia> {
    inertia_oracle_dense_with_tol(m, EIGENVALUE_ZERO_REL_TOL)
}

/// As [`inertia_oracle_dense`], with a caller-chosen relative zero threshold.
pub fn inertia_oracle_dense_with_tol(m: &DenseMatrix, zero_rel_tol: f64) -> Result<Inertia> {
    let eigs = jacobi_eigenvalues(m)?;
    let zero_tol = zero_rel_tol * m.max_abs();
    let mut inertia = Inertia::zero_dim();
    for e in eigs {
        if e.abs() <= zero_tol {
            inertia.zero += 1;
        } else if e > 0.0 {
            inertia.positive += 1;
        } else {
            inertia.negative += 1;
        }
    }
    Ok(inertia)
}
