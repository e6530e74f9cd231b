//! Synthetic KKT systems built around feed-forward network constraints.
//!
//! The generated saddle system is
//!
//! ```text
//!   M = [ A   Bᵀ ]     A = [ W_xx  ∇xfᵀ ]     C = [ W_yy  Jᵀ ]
//!       [ B   C  ],        [ ∇xf   0    ],        [ J     0  ]
//! ```
//!
//! where `J` is the network's intermediate-variable Jacobian. The coupling
//! `B` carries exactly two kinds of entries: the input band `−W₁` (network
//! inputs are A-side variables) and derivative entries for the extra
//! constraints that mention network outputs. Its nonzero columns are
//! therefore the linking variables/constraints, which the solver exploits.
//!
//! Every random draw comes from a counter-based generator seeded as
//! `(seed, stream)`, so each ingredient of an instance is independently
//! regenerable and identical seeds reproduce identical instances bit for bit.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::BlockStructure;
use crate::error::{Error, Result};
use crate::market;
use crate::net::{nn_jacobian, Activation, NeuralNetSpec};
use crate::sparse::{SparseMatrix, SymmetricSparse};

// Independent draw streams within one seed.
const STREAM_WEIGHTS: u64 = 1;
const STREAM_BIASES: u64 = 2;
const STREAM_INPUT_POINT: u64 = 3;
const STREAM_WXX: u64 = 4;
const STREAM_GRADF: u64 = 5;
const STREAM_WYY: u64 = 6;
const STREAM_LINKS: u64 = 7;
const STREAM_XTRUE: u64 = 8;
const STREAM_BARRIERS: u64 = 9;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Full parameterization of one synthetic instance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GeneratorParams {
    pub layer_widths: Vec<usize>,
    pub activations: Vec<Activation>,
    /// A-side variable count; must cover the network inputs.
    pub n_extra_vars: usize,
    /// A-side equality constraint count.
    pub m_extra_cons: usize,
    /// Probability that an extra constraint links to the network outputs.
    pub link_density: f64,
    /// When false, the input term `W₁x₀` is treated as folded into the first
    /// bias and `B` carries no input band.
    pub input_coupling: bool,
    pub wxx_density: f64,
    pub wyy_density: f64,
    pub gradf_density: f64,
    /// Shift Hessian-block diagonals to strict dominance (convex instances).
    pub diag_dominant: bool,
    /// Barrier diagonal magnitudes are log-uniform over this range.
    pub barrier_range: (f64, f64),
    pub seed: u64,
}

impl GeneratorParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::InvalidParameter("need at least one layer".into()));
        }
        let n0 = self.layer_widths[0];
        if self.input_coupling && self.n_extra_vars < n0 {
            return Err(Error::InvalidParameter(format!(
                "n_extra_vars = {} cannot host {n0} network inputs",
                self.n_extra_vars
            )));
        }
        if self.n_extra_vars == 0 {
            return Err(Error::InvalidParameter(
                "need at least one A-side variable".into(),
            ));
        }
        if self.m_extra_cons > self.n_extra_vars {
            return Err(Error::InvalidParameter(format!(
                "{} constraints over {} variables cannot have full row rank",
                self.m_extra_cons, self.n_extra_vars
            )));
        }
        if !(self.link_density > 0.0 && self.link_density <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "link_density = {} outside (0, 1]",
                self.link_density
            )));
        }
        for (name, d) in [
            ("wxx_density", self.wxx_density),
            ("wyy_density", self.wyy_density),
            ("gradf_density", self.gradf_density),
        ] {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {d} outside [0, 1]"
                )));
            }
        }
        let (lo, hi) = self.barrier_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidParameter(format!(
                "barrier_range ({lo}, {hi}) must be positive and ordered"
            )));
        }
        Ok(())
    }
}

/// Named instance families at three desk scales. The shapes echo the three
/// application regimes: `mnist-like` has a pivot block a few times larger
/// than `A` with a dense input stripe; `scopf-like` has a small `A` dominated
/// by the pivot; `lsv-like` has `A` larger than the pivot.
pub fn instance_presets(name: &str, scale: &str) -> Result<GeneratorParams> {
    let (layer_widths, n_extra_vars, m_extra_cons): (Vec<usize>, usize, usize) = match (name, scale)
    {
        ("mnist-like", "tiny") => (vec![16, 20, 20, 12], 60, 10),
        ("mnist-like", "small") => (vec![24, 32, 32, 16], 90, 14),
        ("mnist-like", "medium") => (vec![48, 64, 64, 24], 160, 24),
        ("scopf-like", "tiny") => (vec![6, 10, 10, 6], 8, 4),
        ("scopf-like", "small") => (vec![8, 16, 16, 10], 10, 5),
        ("scopf-like", "medium") => (vec![16, 40, 40, 20], 20, 10),
        ("lsv-like", "tiny") => (vec![4, 6, 4], 40, 18),
        ("lsv-like", "small") => (vec![6, 8, 6], 80, 36),
        ("lsv-like", "medium") => (vec![8, 10, 8], 150, 70),
        (n, s) => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset/scale combination '{n}'/'{s}'"
            )))
        }
    };
    let layers = layer_widths.len() - 1;
    let mut activations = vec![Activation::Tanh; layers];
    activations[layers - 1] = Activation::Sigmoid;
    // The lsv-like family carries most of its weight on the A side, the
    // regime where quadratic-program data runs much denser.
    let (wxx_density, wyy_density, gradf_density) = match name {
        "lsv-like" => (0.30, 0.12, 0.50),
        _ => (0.15, 0.05, 0.35),
    };
    Ok(GeneratorParams {
        layer_widths,
        activations,
        n_extra_vars,
        m_extra_cons,
        link_density: 0.15,
        input_coupling: true,
        wxx_density,
        wyy_density,
        gradf_density,
        diag_dominant: false,
        barrier_range: (1e-2, 1e2),
        seed: 0,
    })
}

pub const PRESET_NAMES: [&str; 3] = ["mnist-like", "scopf-like", "lsv-like"];
pub const SCALE_NAMES: [&str; 3] = ["tiny", "small", "medium"];

/// One synthetic KKT instance: the four blocks, dimensions, and ground truth.
#[derive(Debug, Clone)]
pub struct KKTSystem {
    /// `[[W_xx, ∇xfᵀ], [∇xf, 0]]`, dimension `n_x + m_x`.
    pub a: SymmetricSparse,
    /// Coupling block, `n_c × n_a`.
    pub b: SparseMatrix,
    pub w_yy: SymmetricSparse,
    pub j: SparseMatrix,
    pub j_structure: BlockStructure,
    /// A-side variable count (the (1,1) sub-block of `A`).
    pub n_x: usize,
    /// Intermediate-variable count; the pivot block has dimension `2 n_y`.
    pub n_y: usize,
    /// Total variables `n_x + n_y`.
    pub n_vars: usize,
    /// Total equality constraints `m_x + n_y`.
    pub n_cons: usize,
    pub rhs: Vec<f64>,
    pub x_true: Vec<f64>,
    pub label: String,
    pub seed: u64,
}

impl KKTSystem {
    pub fn n_a(&self) -> usize {
        self.a.dim()
    }

    pub fn n_c(&self) -> usize {
        2 * self.n_y
    }

    pub fn dim(&self) -> usize {
        self.n_a() + self.n_c()
    }

    /// Assembles the full symmetric matrix `[[A, Bᵀ], [B, C]]`.
    pub fn assemble_full(&self) -> SymmetricSparse {
        let n_a = self.n_a();
        let dim = self.dim();
        let mut t: Vec<(usize, usize, f64)> = Vec::new();
        t.extend_from_slice(self.a.canonical());
        for (i, j, v) in self.b.canonical_triples() {
            t.push((n_a + i, j, v));
        }
        for &(i, j, v) in self.w_yy.canonical() {
            t.push((n_a + i, n_a + j, v));
        }
        for (i, j, v) in self.j.canonical_triples() {
            t.push((n_a + self.n_y + i, n_a + j, v));
        }
        SymmetricSparse::from_triplets(dim, t).expect("block dims are consistent")
    }

    /// Assembles the pivot matrix `C = [[W_yy, Jᵀ], [J, 0]]` in general form.
    pub fn assemble_pivot(&self) -> SparseMatrix {
        let n_y = self.n_y;
        let mut t: Vec<(usize, usize, f64)> = Vec::new();
        for &(i, j, v) in self.w_yy.canonical() {
            t.push((i, j, v));
            if i != j {
                t.push((j, i, v));
            }
        }
        for (i, j, v) in self.j.canonical_triples() {
            t.push((n_y + i, j, v));
            t.push((j, n_y + i, v));
        }
        SparseMatrix::from_triplets(2 * n_y, 2 * n_y, t).expect("pivot dims are consistent")
    }

    /// `A` with `δ` added to the diagonal of its variable sub-block.
    pub fn regularized_a(&self, delta: f64) -> SymmetricSparse {
        self.a.with_shifted_diagonal(0..self.n_x, delta)
    }
}

/// True when the rectangular pattern admits a matching covering every row.
fn has_full_row_matching(nrows: usize, ncols: usize, entries: &[(usize, usize)]) -> bool {
    let mut cols_of: Vec<Vec<usize>> = vec![Vec::new(); nrows];
    for &(r, c) in entries {
        cols_of[r].push(c);
    }
    let mut col_to_row: Vec<Option<usize>> = vec![None; ncols];
    fn try_row(
        r: usize,
        cols_of: &[Vec<usize>],
        col_to_row: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &c in &cols_of[r] {
            if visited[c] {
                continue;
            }
            visited[c] = true;
            if col_to_row[c].is_none()
                || try_row(col_to_row[c].unwrap(), cols_of, col_to_row, visited)
            {
                col_to_row[c] = Some(r);
                return true;
            }
        }
        false
    }
    for r in 0..nrows {
        let mut visited = vec![false; ncols];
        if !try_row(r, &cols_of, &mut col_to_row, &mut visited) {
            return false;
        }
    }
    true
}

fn log_uniform(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    let (lo, hi) = range;
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Random sparse symmetric block with strictly positive barrier diagonal.
fn random_hessian_block(
    dim: usize,
    density: f64,
    diag_dominant: bool,
    rng: &mut impl Rng,
    barrier_rng: &mut impl Rng,
    barrier_range: (f64, f64),
) -> SymmetricSparse {
    let mut t: Vec<(usize, usize, f64)> = Vec::new();
    let mut row_abs = vec![0.0_f64; dim];
    for i in 0..dim {
        for j in 0..i {
            if rng.gen_bool(density) {
                let v = rng.gen_range(-1.0..1.0);
                t.push((i, j, v));
                row_abs[i] += v.abs();
                row_abs[j] += v.abs();
            }
        }
    }
    for (i, &abs) in row_abs.iter().enumerate() {
        let barrier = log_uniform(barrier_rng, barrier_range);
        let d = if diag_dominant {
            barrier + abs
        } else {
            barrier
        };
        t.push((i, i, d));
    }
    SymmetricSparse::from_triplets(dim, t).expect("entries in range")
}

/// Builds the network from the seed's weight/bias streams.
fn build_network(params: &GeneratorParams) -> Result<NeuralNetSpec> {
    let mut w_rng = stream_rng(params.seed, STREAM_WEIGHTS);
    let mut b_rng = stream_rng(params.seed, STREAM_BIASES);
    let widths = &params.layer_widths;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..widths.len() - 1 {
        let scale = 1.0 / (widths[l] as f64).sqrt();
        weights.push(crate::dense::DenseMatrix::from_fn(
            widths[l + 1],
            widths[l],
            |_, _| w_rng.gen_range(-scale..scale),
        ));
        biases.push(
            (0..widths[l + 1])
                .map(|_| b_rng.gen_range(-0.5..0.5))
                .collect(),
        );
    }
    NeuralNetSpec::new(
        widths.clone(),
        params.activations.clone(),
        weights,
        biases,
        params.seed,
    )
}

/// Generates one instance. Identical parameters (seed included) yield an
/// identical instance.
pub fn generate_kkt(params: &GeneratorParams) -> Result<KKTSystem> {
    params.validate()?;
    let spec = build_network(params)?;
    let n0 = spec.input_dim();
    let n_x = params.n_extra_vars;
    let m_x = params.m_extra_cons;
    let n_a = n_x + m_x;

    // Network linearization point.
    let mut x0_rng = stream_rng(params.seed, STREAM_INPUT_POINT);
    let x0: Vec<f64> = (0..n0).map(|_| x0_rng.gen_range(-1.0..1.0)).collect();
    let (j, j_structure) = nn_jacobian(&spec, &x0)?;
    let n_y = spec.state_dim();

    let mut barrier_rng = stream_rng(params.seed, STREAM_BARRIERS);
    let mut wxx_rng = stream_rng(params.seed, STREAM_WXX);
    let w_xx = random_hessian_block(
        n_x,
        params.wxx_density,
        params.diag_dominant,
        &mut wxx_rng,
        &mut barrier_rng,
        params.barrier_range,
    );
    let mut wyy_rng = stream_rng(params.seed, STREAM_WYY);
    let w_yy = random_hessian_block(
        n_y,
        params.wyy_density,
        params.diag_dominant,
        &mut wyy_rng,
        &mut barrier_rng,
        params.barrier_range,
    );

    // Extra-constraint Jacobian with structural full row rank.
    let mut gradf_rng = stream_rng(params.seed, STREAM_GRADF);
    let mut gradf_entries: Vec<(usize, usize, f64)> = Vec::new();
    if m_x > 0 {
        let mut ok = false;
        for _attempt in 0..100 {
            let mut pattern: Vec<(usize, usize)> = Vec::new();
            for r in 0..m_x {
                let mut row_has = false;
                for c in 0..n_x {
                    if gradf_rng.gen_bool(params.gradf_density) {
                        pattern.push((r, c));
                        row_has = true;
                    }
                }
                if !row_has {
                    pattern.push((r, gradf_rng.gen_range(0..n_x)));
                }
            }
            if has_full_row_matching(m_x, n_x, &pattern) {
                gradf_entries = pattern
                    .into_iter()
                    .map(|(r, c)| (r, c, gradf_rng.gen_range(-1.0..1.0)))
                    .collect();
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::InvalidParameter(
                "could not draw a structurally full-rank constraint Jacobian".into(),
            ));
        }
    }

    // A = [[W_xx, ∇xfᵀ], [∇xf, 0]].
    let mut a_triples: Vec<(usize, usize, f64)> = w_xx.canonical().to_vec();
    for &(r, c, v) in &gradf_entries {
        a_triples.push((n_x + r, c, v));
    }
    let a = SymmetricSparse::from_triplets(n_a, a_triples)?;

    // Coupling block B.
    let mut b_triples: Vec<(usize, usize, f64)> = Vec::new();
    if params.input_coupling {
        let w1 = &spec.weights[0];
        for c in 0..n0 {
            for r in 0..spec.layer_widths[1] {
                let v = w1.get(r, c);
                if v != 0.0 {
                    b_triples.push((n_y + r, c, -v));
                }
            }
        }
    }
    let mut link_rng = stream_rng(params.seed, STREAM_LINKS);
    let out_range = spec.output_state_range();
    for k in 0..m_x {
        if !link_rng.gen_bool(params.link_density) {
            continue;
        }
        let mut any = false;
        for o in out_range.clone() {
            if link_rng.gen_bool(0.5) {
                b_triples.push((o, n_x + k, link_rng.gen_range(-1.0..1.0)));
                any = true;
            }
        }
        if !any {
            let o = out_range.start + link_rng.gen_range(0..out_range.len());
            b_triples.push((o, n_x + k, link_rng.gen_range(-1.0..1.0)));
        }
    }
    let b = SparseMatrix::from_triplets(2 * n_y, n_a, b_triples)?;

    let mut sys = KKTSystem {
        a,
        b,
        w_yy,
        j,
        j_structure,
        n_x,
        n_y,
        n_vars: n_x + n_y,
        n_cons: m_x + n_y,
        rhs: Vec::new(),
        x_true: Vec::new(),
        label: String::new(),
        seed: params.seed,
    };

    let mut xt_rng = stream_rng(params.seed, STREAM_XTRUE);
    let x_true: Vec<f64> = (0..sys.dim())
        .map(|_| xt_rng.gen_range(-1.0..1.0))
        .collect();
    sys.rhs = sys.assemble_full().matvec(&x_true)?;
    sys.x_true = x_true;
    Ok(sys)
}

/// Convenience: preset + scale + seed in one call, with a readable label.
pub fn generate_preset(name: &str, scale: &str, seed: u64) -> Result<KKTSystem> {
    let params = instance_presets(name, scale)?.with_seed(seed);
    let mut sys = generate_kkt(&params)?;
    sys.label = format!("{name}/{scale}/seed{seed}");
    Ok(sys)
}

// Instance directory layout.
pub const FULL_FILE: &str = "full.mtx";
pub const A_FILE: &str = "a.mtx";
pub const B_FILE: &str = "b.mtx";
pub const WYY_FILE: &str = "wyy.mtx";
pub const J_FILE: &str = "j.mtx";
pub const META_FILE: &str = "meta.json";

#[derive(serde::Serialize, serde::Deserialize)]
struct InstanceMeta {
    label: String,
    seed: u64,
    n_vars: usize,
    n_cons: usize,
    n_x: usize,
    n_y: usize,
    j_structure: BlockStructure,
    rhs: Vec<f64>,
    x_true: Vec<f64>,
}

/// Writes the instance directory: the assembled matrix, its four blocks, and
/// a JSON sidecar with the dimensions, block structure, and vectors.
pub fn write_instance(dir: &Path, sys: &KKTSystem) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    market::write_symmetric(&dir.join(FULL_FILE), &sys.assemble_full())?;
    market::write_symmetric(&dir.join(A_FILE), &sys.a)?;
    market::write_general(&dir.join(B_FILE), &sys.b)?;
    market::write_symmetric(&dir.join(WYY_FILE), &sys.w_yy)?;
    market::write_general(&dir.join(J_FILE), &sys.j)?;
    let meta = InstanceMeta {
        label: sys.label.clone(),
        seed: sys.seed,
        n_vars: sys.n_vars,
        n_cons: sys.n_cons,
        n_x: sys.n_x,
        n_y: sys.n_y,
        j_structure: sys.j_structure.clone(),
        rhs: sys.rhs.clone(),
        x_true: sys.x_true.clone(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::BadInstance(format!("meta serialization: {e}")))?;
    std::fs::write(dir.join(META_FILE), json + "\n")?;
    Ok(())
}

/// Reads an instance directory and cross-checks it: block dimensions must
/// match the sidecar and the stored full matrix must equal the reassembled
/// blocks exactly.
pub fn read_instance(dir: &Path) -> Result<KKTSystem> {
    let meta_text = std::fs::read_to_string(dir.join(META_FILE))?;
    let meta: InstanceMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::BadInstance(format!("meta parse: {e}")))?;
    let full = market::read_symmetric(&dir.join(FULL_FILE))?;
    let a = market::read_symmetric(&dir.join(A_FILE))?;
    let b = market::read_general(&dir.join(B_FILE))?;
    let w_yy = market::read_symmetric(&dir.join(WYY_FILE))?;
    let j = market::read_general(&dir.join(J_FILE))?;

    let n_y = meta.n_y;
    let m_x = meta.n_cons - n_y;
    let n_a = meta.n_x + m_x;
    if a.dim() != n_a
        || w_yy.dim() != n_y
        || j.nrows() != n_y
        || j.ncols() != n_y
        || b.nrows() != 2 * n_y
        || b.ncols() != n_a
        || meta.j_structure.dim() != n_y
    {
        return Err(Error::BadInstance(
            "sidecar dims disagree with blocks".into(),
        ));
    }
    let dim = n_a + 2 * n_y;
    if meta.rhs.len() != dim || meta.x_true.len() != dim || full.dim() != dim {
        return Err(Error::BadInstance(
            "vector/matrix dimension mismatch".into(),
        ));
    }

    let sys = KKTSystem {
        a,
        b,
        w_yy,
        j,
        j_structure: meta.j_structure,
        n_x: meta.n_x,
        n_y,
        n_vars: meta.n_vars,
        n_cons: meta.n_cons,
        rhs: meta.rhs,
        x_true: meta.x_true,
        label: meta.label,
        seed: meta.seed,
    };
    if sys.assemble_full().canonical() != full.canonical() {
        return Err(Error::BadInstance(
            "stored full matrix disagrees with assembled blocks".into(),
        ));
    }
    Ok(sys)
}
