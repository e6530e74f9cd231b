//! Block-triangular structure descriptions and the explicit pivot-matrix
//! permutation.
//!
//! A [`BlockStructure`] records where the diagonal blocks of a block
//! lower-triangular matrix begin and end, plus storage hints for the
//! off-diagonal blocks. [`structured_pivot_permutation`] produces the
//! closed-form row/column permutation that turns the saddle pivot matrix
//! `C = [[W_yy, Jᵀ], [J, 0]]` into block lower-triangular form whenever `J`
//! itself is block lower triangular.

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::sparse::SparseMatrix;

/// Storage class of one off-diagonal block in a block-triangular matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffDiagTag {
    /// Entries only on the block's local diagonal (e.g. activation-derivative
    /// bands): stored as a value array.
    Diagonal,
    /// Mostly full (e.g. weight-matrix bands): stored as a dense matrix.
    Dense,
    /// Anything else: compressed-column sparse.
    Sparse,
}

/// Diagonal-block boundaries of a block lower-triangular matrix, with
/// optional storage tags for off-diagonal blocks.
///
/// `boundaries` is strictly increasing, starts at 0, and ends at the matrix
/// dimension; block `i` covers rows/columns `boundaries[i]..boundaries[i+1]`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BlockStructure {
    boundaries: Vec<usize>,
    /// `(block_row, block_col, tag)` with `block_row > block_col`.
    tags: Vec<(usize, usize, OffDiagTag)>,
}

impl BlockStructure {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.first() != Some(&0) {
            return Err(Error::InvalidParameter(
                "block boundaries must start at 0".into(),
            ));
        }
        if !boundaries.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "block boundaries must be strictly increasing".into(),
            ));
        }
        Ok(BlockStructure {
            boundaries,
            tags: Vec::new(),
        })
    }

    /// A single block spanning the whole matrix.
    pub fn single_block(dim: usize) -> Self {
        let boundaries = if dim == 0 { vec![0] } else { vec![0, dim] };
        BlockStructure {
            boundaries,
            tags: Vec::new(),
        }
    }

    /// Blocks of the given sizes, in order.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut boundaries = Vec::with_capacity(sizes.len() + 1);
        boundaries.push(0);
        let mut acc = 0usize;
        for &s in sizes {
            if s == 0 {
                return Err(Error::InvalidParameter("zero-sized block".into()));
            }
            acc += s;
            boundaries.push(acc);
        }
        BlockStructure::new(boundaries)
    }

    pub fn dim(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    pub fn num_blocks(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        self.boundaries[block]..self.boundaries[block + 1]
    }

    pub fn block_size(&self, block: usize) -> usize {
        self.boundaries[block + 1] - self.boundaries[block]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        (0..self.num_blocks()).map(|b| self.block_size(b)).collect()
    }

    /// The block containing matrix index `idx`.
    pub fn block_of(&self, idx: usize) -> usize {
        debug_assert!(idx < self.dim());
        match self.boundaries.binary_search(&idx) {
            Ok(b) if b < self.num_blocks() => b,
            Ok(b) => b - 1,
            Err(ins) => ins - 1,
        }
    }

    /// Tags off-diagonal block `(block_row, block_col)`, which must lie
    /// strictly below the block diagonal.
    pub fn set_tag(&mut self, block_row: usize, block_col: usize, tag: OffDiagTag) -> Result<()> {
        if block_row >= self.num_blocks() || block_col >= self.num_blocks() {
            return Err(Error::InvalidParameter(format!(
                "block index ({block_row}, {block_col}) out of range for {} blocks",
                self.num_blocks()
            )));
        }
        if block_row <= block_col {
            return Err(Error::InvalidParameter(format!(
                "off-diagonal tag ({block_row}, {block_col}) must lie below the block diagonal"
            )));
        }
        if let Some(entry) = self
            .tags
            .iter_mut()
            .find(|(r, c, _)| *r == block_row && *c == block_col)
        {
            entry.2 = tag;
        } else {
            self.tags.push((block_row, block_col, tag));
        }
        Ok(())
    }

    /// Caller-provided tag for an off-diagonal block, if any.
    pub fn tag(&self, block_row: usize, block_col: usize) -> Option<OffDiagTag> {
        self.tags
            .iter()
            .find(|(r, c, _)| *r == block_row && *c == block_col)
            .map(|(_, _, t)| *t)
    }

    pub fn tags(&self) -> &[(usize, usize, OffDiagTag)] {
        &self.tags
    }

    /// Checks that `m` has no entries strictly above the block diagonal.
    pub fn check_block_lower(&self, m: &SparseMatrix) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {} x {} but block structure covers dim {}",
                m.nrows(),
                m.ncols(),
                self.dim()
            )));
        }
        for (i, j, _) in m.canonical_triples() {
            let (bi, bj) = (self.block_of(i), self.block_of(j));
            if bj > bi {
                return Err(Error::StructureViolation(format!(
                    "entry ({i}, {j}) lies above the block diagonal (block ({bi}, {bj}))"
                )));
            }
        }
        Ok(())
    }
}

/// Row and column permutations that make the pivot matrix
/// `C = [[W_yy, Jᵀ], [J, 0]]` block lower triangular when `J` is.
///
/// With 0-based indices over dimension `2 n_y`, the column order is
/// `0, …, n_y−1, 2n_y−1, …, n_y` and the row order is
/// `n_y, …, 2n_y−1, n_y−1, …, 0`. The permuted matrix is
/// `[[J, 0], [rev-rows(W_yy), rev(Jᵀ)rev]]`.
pub fn structured_pivot_permutation(n_y: usize) -> (Permutation, Permutation) {
    let mut row = Vec::with_capacity(2 * n_y);
    row.extend(n_y..2 * n_y);
    row.extend((0..n_y).rev());
    let mut col = Vec::with_capacity(2 * n_y);
    col.extend(0..n_y);
    col.extend((n_y..2 * n_y).rev());
    (
        Permutation::from_forward(row).unwrap(),
        Permutation::from_forward(col).unwrap(),
    )
}

/// Block structure of the permuted pivot matrix: the diagonal blocks of `J`
/// followed by the diagonal blocks of `Jᵀ` in reverse order, with off-diagonal
/// tags carried over to their mirrored positions.
pub fn pivot_block_structure(j_structure: &BlockStructure) -> BlockStructure {
    let m = j_structure.num_blocks();
    let mut sizes = j_structure.block_sizes();
    let mut mirrored = sizes.clone();
    mirrored.reverse();
    sizes.extend(mirrored);
    let mut out = BlockStructure::from_sizes(&sizes).unwrap();
    for &(r, c, t) in j_structure.tags() {
        // Top-left quadrant is J itself.
        out.set_tag(r, c, t).unwrap();
        // Bottom-right quadrant is Jᵀ reversed in both directions: block
        // (r, c) of J reappears at (2m−1−c, 2m−1−r), transposed and with
        // rows/columns reversed — which preserves diagonal/dense storage.
        out.set_tag(2 * m - 1 - c, 2 * m - 1 - r, t).unwrap();
    }
    out
}
