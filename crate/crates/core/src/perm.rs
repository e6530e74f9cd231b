//! Permutations in "forward" convention.
//!
//! `forward[i]` is the index in the ORIGINAL ordering that is placed at
//! position `i` of the permuted ordering. Permuting a matrix therefore reads
//! `permuted(i, j) = original(p_row.forward[i], p_col.forward[j])`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            forward: (0..n).collect(),
        }
    }

    /// Validates that `forward` is a bijection on `0..forward.len()`.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut seen = vec![false; n];
        for &idx in &forward {
            if idx >= n {
                return Err(Error::InvalidPermutation(format!(
                    "index {} out of range for length {}",
                    idx, n
                )));
            }
            if seen[idx] {
                return Err(Error::InvalidPermutation(format!(
                    "index {} appears more than once",
                    idx
                )));
            }
            seen[idx] = true;
        }
        Ok(Permutation { forward })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// The inverse permutation: `inverse.forward[original] = position`.
    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0usize; self.forward.len()];
        for (pos, &orig) in self.forward.iter().enumerate() {
            inv[orig] = pos;
        }
        Permutation { forward: inv }
    }

    /// Gathers `x` into permuted order: `out[i] = x[forward[i]]`.
    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.forward.len(), "length mismatch in gather");
        self.forward.iter().map(|&orig| x[orig]).collect()
    }

    /// Scatters a permuted vector back to original order:
    /// `out[forward[i]] = x[i]`.
    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.forward.len(), "length mismatch in scatter");
        let mut out = vec![0.0; x.len()];
        for (pos, &orig) in self.forward.iter().enumerate() {
            out[orig] = x[pos];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::from_forward(vec![0, 0]).is_err());
        assert!(Permutation::from_forward(vec![0, 2]).is_err());
        assert!(Permutation::from_forward(vec![1, 0]).is_ok());
    }

    #[test]
    fn gather_scatter_are_inverse() {
        let p = Permutation::from_forward(vec![2, 0, 1]).unwrap();
        let x = vec![10.0, 20.0, 30.0];
        assert_eq!(p.gather(&x), vec![30.0, 10.0, 20.0]);
        assert_eq!(p.scatter(&p.gather(&x)), x);
    }

    proptest! {
        #[test]
        fn inverse_round_trips(seed in 0u64..1000, n in 1usize..50) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut fwd: Vec<usize> = (0..n).collect();
            fwd.shuffle(&mut rng);
            let p = Permutation::from_forward(fwd).unwrap();
            let inv = p.inverse();
            for i in 0..n {
                prop_assert_eq!(inv.forward()[p.forward()[i]], i);
                prop_assert_eq!(p.forward()[inv.forward()[i]], i);
            }
        }
    }
}
