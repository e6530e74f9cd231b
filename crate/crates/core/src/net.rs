//! Feed-forward network fixtures: forward pass, constraint residual, and the
//! block-banded constraint Jacobian.
//!
//! The network's layer equations are written as equality constraints over
//! intermediate variables `(z_1, y_1, …, z_L, y_L)`:
//!
//! ```text
//!   z_l − W_l y_{l−1} − b_l = 0      (y_0 = x, the network input)
//!   y_l − σ_l(z_l)          = 0
//! ```
//!
//! Differentiating with respect to the intermediate variables gives a block
//! lower-bidiagonal Jacobian with identity diagonal blocks and alternating
//! subdiagonal bands: `−Σ_l` (diagonal, the activation derivatives) and
//! `−W_l` (dense, for layers past the first). The input-layer band `−W_1`
//! couples to `x` and therefore belongs to the cross-block coupling, not to
//! this Jacobian.

use crate::block::{BlockStructure, OffDiagTag};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Linear => x,
        }
    }

    /// Derivative evaluated at pre-activation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Linear => 1.0,
        }
    }
}

/// A concrete feed-forward network: widths `[n_0, …, n_L]`, one activation
/// and weight/bias set per layer.
#[derive(Debug, Clone)]
pub struct NeuralNetSpec {
    pub layer_widths: Vec<usize>,
    pub activations: Vec<Activation>,
    /// `weights[l]` is `layer_widths[l+1] x layer_widths[l]`.
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
}

impl NeuralNetSpec {
    pub fn new(
        layer_widths: Vec<usize>,
        activations: Vec<Activation>,
        weights: Vec<DenseMatrix>,
        biases: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let l = layer_widths.len().saturating_sub(1);
        if l == 0 {
            return Err(Error::InvalidParameter(
                "a network needs at least one layer".into(),
            ));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidParameter("zero layer width".into()));
        }
        if activations.len() != l || weights.len() != l || biases.len() != l {
            return Err(Error::InvalidParameter(format!(
                "expected {l} activations/weights/biases, got {}/{}/{}",
                activations.len(),
                weights.len(),
                biases.len()
            )));
        }
        for i in 0..l {
            if weights[i].nrows() != layer_widths[i + 1] || weights[i].ncols() != layer_widths[i] {
                return Err(Error::InvalidParameter(format!(
                    "weight {i} is {} x {}, expected {} x {}",
                    weights[i].nrows(),
                    weights[i].ncols(),
                    layer_widths[i + 1],
                    layer_widths[i]
                )));
            }
            if biases[i].len() != layer_widths[i + 1] {
                return Err(Error::InvalidParameter(format!(
                    "bias {i} has length {}, expected {}",
                    biases[i].len(),
                    layer_widths[i + 1]
                )));
            }
        }
        Ok(NeuralNetSpec {
            layer_widths,
            activations,
            weights,
            biases,
            seed,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    /// Dimension of the intermediate-variable vector `(z_1, y_1, …, z_L, y_L)`.
    pub fn state_dim(&self) -> usize {
        2 * self.layer_widths[1..].iter().sum::<usize>()
    }

    /// Indices of the final-layer outputs `y_L` within the state vector.
    pub fn output_state_range(&self) -> std::ops::Range<usize> {
        let n = self.state_dim();
        n - self.output_dim()..n
    }
}

/// Per-layer pre-activation and activation values.
#[derive(Debug, Clone)]
pub struct LayerState {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

/// Evaluates the network, returning `(z_l, y_l)` for every layer.
pub fn forward_pass(spec: &NeuralNetSpec, x: &[f64]) -> Result<Vec<LayerState>> {
    if x.len() != spec.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input has length {}, expected {}",
            x.len(),
            spec.input_dim()
        )));
    }
    let mut states = Vec::with_capacity(spec.num_layers());
    let mut prev: Vec<f64> = x.to_vec();
    for l in 0..spec.num_layers() {
        let w = &spec.weights[l];
        let mut z = spec.biases[l].clone();
        for (j, &pj) in prev.iter().enumerate() {
            let col = w.col(j);
            for (i, zi) in z.iter_mut().enumerate() {
                *zi += col[i] * pj;
            }
        }
        let y: Vec<f64> = z.iter().map(|&v| spec.activations[l].apply(v)).collect();
        prev = y.clone();
        states.push(LayerState { z, y });
    }
    Ok(states)
}

/// The layer equations evaluated at an arbitrary state vector (not
/// necessarily one produced by the forward pass). Row order matches
/// [`nn_jacobian`]: per layer, the `z`-defining rows then the `y`-defining
/// rows.
pub fn constraint_residual(spec: &NeuralNetSpec, x: &[f64], state: &[f64]) -> Result<Vec<f64>> {
    if x.len() != spec.input_dim() {
        return Err(Error::DimensionMismatch("input length".into()));
    }
    if state.len() != spec.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, expected {}",
            state.len(),
            spec.state_dim()
        )));
    }
    let mut out = Vec::with_capacity(spec.state_dim());
    let mut offset = 0usize;
    let mut prev_y_offset: Option<usize> = None;
    for l in 0..spec.num_layers() {
        let wl = spec.layer_widths[l + 1];
        let w = &spec.weights[l];
        let z = &state[offset..offset + wl];
        let y = &state[offset + wl..offset + 2 * wl];
        for i in 0..wl {
            let mut r = z[i] - spec.biases[l][i];
            for j in 0..spec.layer_widths[l] {
                let yj = match prev_y_offset {
                    None => x[j],
                    Some(po) => state[po + j],
                };
                r -= w.get(i, j) * yj;
            }
            out.push(r);
        }
        for i in 0..wl {
            out.push(y[i] - spec.activations[l].apply(z[i]));
        }
        prev_y_offset = Some(offset + wl);
        offset += 2 * wl;
    }
    Ok(out)
}

/// Jacobian of [`constraint_residual`] with respect to the state vector,
/// evaluated at the forward-pass state for input `x`, together with its
/// band structure (two bands per layer: the `z` band then the `y` band).
pub fn nn_jacobian(spec: &NeuralNetSpec, x: &[f64]) -> Result<(SparseMatrix, BlockStructure)> {
    let states = forward_pass(spec, x)?;
    let n = spec.state_dim();
    let mut t: Vec<(usize, usize, f64)> = Vec::new();

    let mut band_sizes = Vec::with_capacity(2 * spec.num_layers());
    for l in 0..spec.num_layers() {
        let wl = spec.layer_widths[l + 1];
        band_sizes.push(wl);
        band_sizes.push(wl);
    }
    let mut structure = BlockStructure::from_sizes(&band_sizes)?;

    let mut offset = 0usize;
    for l in 0..spec.num_layers() {
        let wl = spec.layer_widths[l + 1];
        let z_band = 2 * l;
        // Unit diagonal on both bands.
        for i in 0..2 * wl {
            t.push((offset + i, offset + i, 1.0));
        }
        // −W_l for layers past the first: couples z_l rows to y_{l−1}.
        if l > 0 {
            let prev_w = spec.layer_widths[l];
            let y_prev_start = offset - prev_w;
            let w = &spec.weights[l];
            for j in 0..prev_w {
                let col = w.col(j);
                for (i, &v) in col.iter().enumerate() {
                    if v != 0.0 {
                        t.push((offset + i, y_prev_start + j, -v));
                    }
                }
            }
            structure.set_tag(z_band, z_band - 1, OffDiagTag::Dense)?;
        }
        // −Σ_l: couples y_l rows to z_l.
        for i in 0..wl {
            let d = spec.activations[l].derivative(states[l].z[i]);
            if d != 0.0 {
                t.push((offset + wl + i, offset + i, -d));
            }
        }
        structure.set_tag(z_band + 1, z_band, OffDiagTag::Diagonal)?;
        offset += 2 * wl;
    }
    Ok((SparseMatrix::from_triplets(n, n, t)?, structure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocktri::bt_factorize;
    use crate::perm::Permutation;
    use rand::{Rng, SeedableRng};

    fn random_spec(widths: &[usize], acts: &[Activation], seed: u64) -> NeuralNetSpec {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..widths.len() - 1 {
            let scale = 1.0 / (widths[l] as f64).sqrt();
            weights.push(DenseMatrix::from_fn(widths[l + 1], widths[l], |_, _| {
                rng.gen_range(-scale..scale)
            }));
            biases.push(
                (0..widths[l + 1])
                    .map(|_| rng.gen_range(-0.5..0.5))
                    .collect(),
            );
        }
        NeuralNetSpec::new(widths.to_vec(), acts.to_vec(), weights, biases, seed).unwrap()
    }

    #[test]
    fn identity_network_passes_input_through() {
        let spec = NeuralNetSpec::new(
            vec![3, 3],
            vec![Activation::Linear],
            vec![DenseMatrix::identity(3)],
            vec![vec![0.0; 3]],
            0,
        )
        .unwrap();
        let states = forward_pass(&spec, &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(states[0].y, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn odd_activation_at_zero() {
        let spec = NeuralNetSpec::new(
            vec![1, 1],
            vec![Activation::Tanh],
            vec![DenseMatrix::from_fn(1, 1, |_, _| 2.0)],
            vec![vec![0.0]],
            0,
        )
        .unwrap();
        let states = forward_pass(&spec, &[0.0]).unwrap();
        assert_eq!(states[0].z, vec![0.0]);
        assert_eq!(states[0].y, vec![0.0]);
        // tanh'(0) = 1.
        assert_eq!(Activation::Tanh.derivative(0.0), 1.0);
    }

    #[test]
    fn forward_pass_matches_straight_line_reimplementation() {
        let spec = random_spec(
            &[4, 5, 3, 2],
            &[Activation::Tanh, Activation::Sigmoid, Activation::Linear],
            77,
        );
        let x = [0.3, -0.8, 1.2, 0.1];
        let states = forward_pass(&spec, &x).unwrap();

        // Deliberately duplicated arithmetic, written differently.
        let mut cur: Vec<f64> = x.to_vec();
        for l in 0..3 {
            let rows = spec.layer_widths[l + 1];
            let cols = spec.layer_widths[l];
            let mut z = vec![0.0; rows];
            for i in 0..rows {
                let mut acc = spec.biases[l][i];
                for j in 0..cols {
                    acc += spec.weights[l].get(i, j) * cur[j];
                }
                z[i] = acc;
            }
            let y: Vec<f64> = z
                .iter()
                .map(|&v| match spec.activations[l] {
                    Activation::Tanh => v.tanh(),
                    Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
                    Activation::Linear => v,
                })
                .collect();
            for i in 0..rows {
                assert!((states[l].z[i] - z[i]).abs() < 1e-14);
                assert!((states[l].y[i] - y[i]).abs() < 1e-14);
            }
            cur = y;
        }
    }

    #[test]
    fn single_linear_layer_jacobian() {
        // Width-1 linear layer: J over (z1, y1) is [[1, 0], [−1, 1]]; the
        // weight enters the input coupling, not J.
        let spec = NeuralNetSpec::new(
            vec![1, 1],
            vec![Activation::Linear],
            vec![DenseMatrix::from_fn(1, 1, |_, _| 3.0)],
            vec![vec![0.0]],
            0,
        )
        .unwrap();
        let (j, s) = nn_jacobian(&spec, &[1.0]).unwrap();
        let d = j.to_dense();
        assert_eq!(
            (d.get(0, 0), d.get(0, 1), d.get(1, 0), d.get(1, 1)),
            (1.0, 0.0, -1.0, 1.0)
        );
        assert_eq!(s.block_sizes(), vec![1, 1]);
        assert_eq!(s.tag(1, 0), Some(OffDiagTag::Diagonal));
    }

    #[test]
    fn jacobian_bands_and_identity_blocks() {
        let spec = random_spec(
            &[3, 4, 2, 5],
            &[Activation::Tanh, Activation::Sigmoid, Activation::Tanh],
            5,
        );
        let x = [0.2, -0.4, 0.9];
        let (j, s) = nn_jacobian(&spec, &x).unwrap();
        assert_eq!(s.block_sizes(), vec![4, 4, 2, 2, 5, 5]);
        assert_eq!(s.tag(1, 0), Some(OffDiagTag::Diagonal));
        assert_eq!(s.tag(2, 1), Some(OffDiagTag::Dense));
        assert_eq!(s.tag(3, 2), Some(OffDiagTag::Diagonal));
        assert_eq!(s.tag(4, 3), Some(OffDiagTag::Dense));
        assert_eq!(s.tag(5, 4), Some(OffDiagTag::Diagonal));
        s.check_block_lower(&j).unwrap();

        // Every diagonal block is an exact identity: bt_factorize rides the
        // fast path with zero factorization work.
        let id = Permutation::identity(j.nrows());
        let f = bt_factorize(&j, &id, &id, &s).unwrap();
        assert!(f.all_identity_blocks());
        assert_eq!(f.factor_flops(), 0);
    }

    #[test]
    fn residual_vanishes_at_forward_pass_state() {
        let spec = random_spec(&[2, 3, 2], &[Activation::Sigmoid, Activation::Tanh], 11);
        let x = [0.5, -1.0];
        let states = forward_pass(&spec, &x).unwrap();
        let mut state = Vec::new();
        for st in &states {
            state.extend_from_slice(&st.z);
            state.extend_from_slice(&st.y);
        }
        let r = constraint_residual(&spec, &x, &state).unwrap();
        for (i, v) in r.iter().enumerate() {
            assert!(v.abs() < 1e-14, "row {i}: {v}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let specs = [
            random_spec(&[3, 4, 2], &[Activation::Tanh, Activation::Sigmoid], 1),
            random_spec(
                &[2, 3, 3, 1],
                &[Activation::Sigmoid, Activation::Tanh, Activation::Linear],
                2,
            ),
        ];
        for spec in &specs {
            for _ in 0..10 {
                let x: Vec<f64> = (0..spec.input_dim())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let (j, _) = nn_jacobian(&spec, &x).unwrap();
                let states = forward_pass(&spec, &x).unwrap();
                let mut state = Vec::new();
                for st in &states {
                    state.extend_from_slice(&st.z);
                    state.extend_from_slice(&st.y);
                }
                // Directional derivative along a random unit-ish direction.
                let n = spec.state_dim();
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let h = 1e-7;
                let plus: Vec<f64> = state.iter().zip(&dir).map(|(s, d)| s + h * d).collect();
                let minus: Vec<f64> = state.iter().zip(&dir).map(|(s, d)| s - h * d).collect();
                let rp = constraint_residual(&spec, &x, &plus).unwrap();
                let rm = constraint_residual(&spec, &x, &minus).unwrap();
                let jd = j.spmv(&dir).unwrap();
                let scale = jd.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
                for i in 0..n {
                    let fd = (rp[i] - rm[i]) / (2.0 * h);
                    assert!(
                        (jd[i] - fd).abs() <= 1e-6 * scale,
                        "row {i}: analytic {} vs fd {fd}",
                        jd[i]
                    );
                }
            }
        }
    }
}
