//! Structured direct solver for symmetric indefinite KKT systems.
//!
//! The library targets saddle-point systems
//!
//! ```text
//!     [ A   Bᵀ ] [ x_A ]   [ r_A ]
//!     [ B   C  ] [ x_C ] = [ r_C ]
//! ```
//!
//! in which the pivot block `C = [[W_yy, Jᵀ], [J, 0]]` carries a nonsingular
//! block-triangular constraint Jacobian `J` (the shape produced by embedding
//! a feed-forward neural network as equality constraints). Instead of handing
//! the whole matrix to a generic symmetric-indefinite factorization, the
//! solver
//!
//! 1. permutes `C` to block lower-triangular form and factors only its
//!    diagonal blocks ([`blocktri`]),
//! 2. forms the Schur complement `S = A − Bᵀ C⁻¹ B` and factors it densely
//!    with Bunch-Kaufman pivoting ([`schur`], [`ldlt`]),
//! 3. reads the inertia of the full matrix off the pivot blocks of `S` plus
//!    the a-priori `(n_y, n_y, 0)` inertia of `C`, and
//! 4. backsolves with iterative refinement against the assembled matrix.
//!
//! Supporting modules provide the sparse containers ([`sparse`]), structural
//! analysis (block triangular form, irreducibility, symbolic fill prediction
//! in [`btf`] and [`fill`]), a no-reordering sparse LDLᵀ baseline used for
//! fill and FLOP comparisons ([`baseline`]), a synthetic KKT instance
//! generator ([`net`], [`generator`]), and Matrix Market I/O ([`market`]).

pub mod baseline;
pub mod block;
pub mod blocktri;
pub mod btf;
pub mod dense;
pub mod error;
pub mod fill;
pub mod generator;
pub mod jacobi;
pub mod ldlt;
pub mod lu;
pub mod market;
pub mod net;
pub mod perm;
pub mod schur;
pub mod sparse;

pub use block::{pivot_block_structure, structured_pivot_permutation, BlockStructure, OffDiagTag};
pub use dense::DenseMatrix;
pub use error::{Error, ErrorClass, Result};
pub use ldlt::Inertia;
pub use perm::Permutation;
pub use sparse::{SparseMatrix, SymmetricSparse};
