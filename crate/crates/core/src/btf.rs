//! General block-triangular decomposition and graph-structure predicates.
//!
//! `find_btf` is the classic two-stage Frobenius construction: place a
//! zero-free diagonal by maximum bipartite matching, then order the strongly
//! connected components of the matched matrix's directed graph so the result
//! is block *lower* triangular with irreducible diagonal blocks.
//! `is_irreducible` and `bipartite_connected` are the graph predicates behind
//! the irreducibility results for saddle matrices `[[I, Bᵀ], [B, I]]`.

use crate::block::BlockStructure;
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::sparse::SparseMatrix;

/// A maximum bipartite matching between columns and rows of a square pattern.
#[derive(Debug, Clone)]
pub struct Matching {
    /// `col_to_row[j]` = row matched to column `j`, if any.
    pub col_to_row: Vec<Option<usize>>,
    /// Number of matched columns.
    pub size: usize,
}

impl Matching {
    pub fn is_perfect(&self) -> bool {
        self.size == self.col_to_row.len()
    }

    /// Unmatched-column count; zero iff the pattern is structurally
    /// nonsingular.
    pub fn deficiency(&self) -> usize {
        self.col_to_row.len() - self.size
    }
}

/// Maximum-cardinality matching via augmenting paths (columns pick rows).
pub fn maximum_matching(m: &SparseMatrix) -> Result<Matching> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matching requires a square pattern, got {} x {}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let csc = m.csc();
    let mut row_to_col: Vec<Option<usize>> = vec![None; n];
    let mut size = 0usize;

    fn augment(
        col: usize,
        csc: &crate::sparse::Csc,
        row_to_col: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        let (rows, _) = csc.col(col);
        for &r in rows {
            if visited[r] {
                continue;
            }
            visited[r] = true;
            match row_to_col[r] {
                None => {
                    row_to_col[r] = Some(col);
                    return true;
                }
                Some(other) => {
                    if augment(other, csc, row_to_col, visited) {
                        row_to_col[r] = Some(col);
                        return true;
                    }
                }
            }
        }
        false
    }

    for col in 0..n {
        let mut visited = vec![false; n];
        if augment(col, csc, &mut row_to_col, &mut visited) {
            size += 1;
        }
    }

    let mut col_to_row = vec![None; n];
    for (r, c) in row_to_col.iter().enumerate() {
        if let Some(c) = c {
            col_to_row[*c] = Some(r);
        }
    }
    Ok(Matching { col_to_row, size })
}

/// Strongly connected components of a directed graph, in Tarjan pop order
/// (every component appears after all components reachable from it).
fn tarjan_scc(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut sccs: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.1 < adj[v].len() {
                let w = adj[v][frame.1];
                frame.1 += 1;
                if index[w] == UNSET {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(parent) = frames.last() {
                    let p = parent.0;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    sccs.push(comp);
                }
            }
        }
    }
    sccs
}

/// Permutes a structurally nonsingular square matrix to block lower-triangular
/// form with irreducible diagonal blocks.
///
/// Returns `(p_row, p_col, structure)` such that
/// `m.permute(&p_row, &p_col)` is block lower triangular under `structure`
/// with a zero-free diagonal. Component order is topological with ties broken
/// by lowest original column index, so the output is deterministic.
pub fn find_btf(m: &SparseMatrix) -> Result<(Permutation, Permutation, BlockStructure)> {
    let matching = maximum_matching(m)?;
    if !matching.is_perfect() {
        return Err(Error::StructurallySingular(format!(
            "maximum matching covers {} of {} columns",
            matching.size,
            matching.col_to_row.len()
        )));
    }
    let n = m.nrows();
    let match_row: Vec<usize> = matching.col_to_row.iter().map(|r| r.unwrap()).collect();

    // Directed graph on column vertices: j -> k when the matched matrix has
    // an off-diagonal entry in position (j, k), i.e. m(match_row[j], k) != 0.
    let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in m.canonical_triples() {
        row_cols[i].push(j);
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            row_cols[match_row[j]]
                .iter()
                .copied()
                .filter(|&k| k != j)
                .collect()
        })
        .collect();

    let mut sccs = tarjan_scc(n, &adj);
    for comp in &mut sccs {
        comp.sort_unstable();
    }

    // Order components topologically. An edge j -> k between components P and
    // Q means entry (P, Q) exists, which block lower triangularity permits
    // only when Q comes no later than P: Q must precede P.
    let k = sccs.len();
    let mut comp_of = vec![0usize; n];
    for (ci, comp) in sccs.iter().enumerate() {
        for &v in comp {
            comp_of[v] = ci;
        }
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); k]; // Q -> list of P
    let mut indeg = vec![0usize; k]; // unplaced predecessors Q of P
    for (j, outs) in adj.iter().enumerate() {
        for &t in outs {
            let (p, q) = (comp_of[j], comp_of[t]);
            if p != q {
                preds[q].push(p);
                indeg[p] += 1;
            }
        }
    }

    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..k)
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((sccs[c][0], c)))
        .collect();
    let mut comp_order = Vec::with_capacity(k);
    while let Some(Reverse((_, c))) = heap.pop() {
        comp_order.push(c);
        for &p in &preds[c] {
            indeg[p] -= 1;
            if indeg[p] == 0 {
                heap.push(Reverse((sccs[p][0], p)));
            }
        }
    }
    debug_assert_eq!(comp_order.len(), k);

    let mut col_forward = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(k);
    for &c in &comp_order {
        sizes.push(sccs[c].len());
        col_forward.extend(sccs[c].iter().copied());
    }
    let row_forward: Vec<usize> = col_forward.iter().map(|&j| match_row[j]).collect();

    let structure = if n == 0 {
        BlockStructure::new(vec![0])?
    } else {
        BlockStructure::from_sizes(&sizes)?
    };
    Ok((
        Permutation::from_forward(row_forward)?,
        Permutation::from_forward(col_forward)?,
        structure,
    ))
}

/// True iff the directed graph of the square pattern is strongly connected.
pub fn is_irreducible(m: &SparseMatrix) -> bool {
    assert_eq!(m.nrows(), m.ncols(), "irreducibility needs a square matrix");
    let n = m.nrows();
    if n <= 1 {
        return true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in m.canonical_triples() {
        if i != j {
            adj[i].push(j);
        }
    }
    tarjan_scc(n, &adj).len() == 1
}

/// Number of connected components in the undirected bipartite graph whose
/// vertices are the rows and columns of `b` and whose edges are its nonzeros.
pub fn bipartite_components(b: &SparseMatrix) -> usize {
    let (r, c) = (b.nrows(), b.ncols());
    let mut parent: Vec<usize> = (0..r + c).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j, _) in b.canonical_triples() {
        let (a, bb) = (find(&mut parent, i), find(&mut parent, r + j));
        if a != bb {
            parent[a] = bb;
        }
    }
    let mut roots = std::collections::BTreeSet::new();
    for v in 0..r + c {
        let root = find(&mut parent, v);
        roots.insert(root);
    }
    roots.len()
}

/// True iff the bipartite graph of `b` is a single connected component
/// covering every row and column.
pub fn bipartite_connected(b: &SparseMatrix) -> bool {
    if b.nrows() + b.ncols() == 0 {
        return true;
    }
    bipartite_components(b) == 1
}
