//! Behavior tests for the `btkkt` binary: subcommand contracts, artifact
//! validity, error classes and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use btkkt::fill::{symbolic_fill_1x1, two_block_saddle_partition, two_block_saddle_pattern};
use btkkt::generator::{
    generate_preset, read_instance, write_instance, GeneratorParams, PRESET_NAMES,
};
use btkkt::market;
use btkkt::net::Activation;
use btkkt::schur::residual_max_norm;
use btkkt::SparseMatrix;
use serde_json::Value;

fn btkkt_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btkkt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn generate_into(dir: &Path, preset: &str, scale: &str, seed: u64) -> Value {
    let out = btkkt_bin(&[
        "generate",
        "--preset",
        preset,
        "--scale",
        scale,
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
        "--json",
    ]);
    assert!(
        out.status.success(),
        "generate failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    json_stdout(&out)
}

#[test]
fn generate_writes_a_validated_instance_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    let summary = generate_into(&dir, "scopf-like", "tiny", 2);

    let files = summary["files"].as_array().unwrap();
    assert_eq!(files.len(), 6);
    for f in files {
        assert!(dir.join(f.as_str().unwrap()).is_file(), "missing {f}");
    }
    let dims = &summary["dims"];
    assert_eq!(
        dims["matrix"].as_u64().unwrap(),
        dims["pivot"].as_u64().unwrap() + dims["schur"].as_u64().unwrap()
    );

    // The directory round-trips through the library reader.
    let sys = read_instance(&dir).unwrap();
    assert_eq!(sys.label, summary["instance"].as_str().unwrap());
    assert_eq!(sys.dim() as u64, dims["matrix"].as_u64().unwrap());
}

#[test]
fn generate_medium_instances_stay_within_dimension_cap() {
    let tmp = tempfile::tempdir().unwrap();
    for preset in PRESET_NAMES {
        let dir = tmp.path().join(preset);
        let summary = generate_into(&dir, preset, "medium", 1);
        let dim = summary["dims"]["matrix"].as_u64().unwrap();
        assert!(dim <= 2000, "{preset}: dim {dim}");
    }
}

#[test]
fn generate_rejects_unknown_preset_with_structural_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = btkkt_bin(&[
        "generate",
        "--preset",
        "bogus",
        "--out",
        tmp.path().join("x").to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = json_stdout(&out);
    assert_eq!(err["error"]["class"].as_str().unwrap(), "structural");
}

#[test]
fn solve_converges_and_writes_the_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    generate_into(&dir, "mnist-like", "tiny", 5);
    let sol = tmp.path().join("x.mtx");

    let out = btkkt_bin(&[
        "solve",
        dir.to_str().unwrap(),
        "--out",
        sol.to_str().unwrap(),
        "--json",
    ]);
    assert!(out.status.success());
    let report = json_stdout(&out);
    assert_eq!(report["method"].as_str().unwrap(), "schur");
    assert!(report["converged"].as_bool().unwrap());
    assert!(report["residual"].as_f64().unwrap() <= 1e-5);
    assert!(report["structured"].is_object());
    assert!(report["baseline"].is_null());

    // The written vector reproduces the reported residual against the
    // assembled matrix, and the target flag is consistent with the counts.
    let x = market::read_vector(&sol).unwrap();
    let sys = read_instance(&dir).unwrap();
    let inertia = &report["inertia"];
    let target_met = inertia["positive"].as_u64().unwrap() as usize == sys.n_vars
        && inertia["negative"].as_u64().unwrap() as usize == sys.n_cons
        && inertia["zero"].as_u64().unwrap() == 0;
    assert_eq!(report["inertia_target_met"].as_bool().unwrap(), target_met);
    let full = sys.assemble_full();
    let res = residual_max_norm(&full, &x, &sys.rhs).unwrap();
    assert!(res <= 1e-5, "stored solution residual {res:.3e}");
}

fn decoupled_params(seed: u64) -> GeneratorParams {
    GeneratorParams {
        layer_widths: vec![6, 8, 6],
        activations: vec![Activation::Tanh, Activation::Sigmoid],
        n_extra_vars: 12,
        m_extra_cons: 0,
        link_density: 0.15,
        input_coupling: false,
        wxx_density: 0.15,
        wyy_density: 0.05,
        gradf_density: 0.35,
        diag_dominant: false,
        barrier_range: (1e-2, 1e2),
        seed,
    }
}

#[test]
fn solve_methods_agree_on_a_decoupled_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    let sys = btkkt::generator::generate_kkt(&decoupled_params(9)).unwrap();
    write_instance(&dir, &sys).unwrap();

    let mut solutions = Vec::new();
    for method in ["schur", "baseline-natural", "baseline-reverse"] {
        let sol = tmp.path().join(format!("{method}.mtx"));
        let out = btkkt_bin(&[
            "solve",
            dir.to_str().unwrap(),
            "--method",
            method,
            "--out",
            sol.to_str().unwrap(),
            "--json",
        ]);
        assert!(
            out.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report = json_stdout(&out);
        assert!(report["converged"].as_bool().unwrap(), "{method}");
        if method == "schur" {
            assert!(report["baseline"].is_null());
        } else {
            assert!(report["structured"].is_null());
            assert!(report["baseline"].is_object());
        }
        solutions.push(market::read_vector(&sol).unwrap());
    }
    let scale = solutions[0]
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    for other in &solutions[1..] {
        let gap = solutions[0]
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(gap / scale <= 1e-9, "methods disagree by {gap:.3e}");
    }
}

#[test]
fn solve_reports_structural_error_for_singular_jacobian() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    let mut sys = generate_preset("scopf-like", "tiny", 3).unwrap();
    // Empty out one Jacobian row: J loses full structural rank but the
    // directory stays internally consistent.
    let kept: Vec<(usize, usize, f64)> = sys
        .j
        .canonical_triples()
        .into_iter()
        .filter(|&(r, _, _)| r != 0)
        .collect();
    sys.j = SparseMatrix::from_triplets(sys.n_y, sys.n_y, kept).unwrap();
    write_instance(&dir, &sys).unwrap();

    let out = btkkt_bin(&["solve", dir.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = json_stdout(&out);
    assert_eq!(err["error"]["class"].as_str().unwrap(), "structural");
}

#[test]
fn solve_missing_directory_exits_with_io_code() {
    let out = btkkt_bin(&["solve", "/nonexistent/instance", "--json"]);
    assert_eq!(out.status.code(), Some(4));
    let err = json_stdout(&out);
    assert_eq!(err["error"]["class"].as_str().unwrap(), "io");
}

#[test]
fn solve_accepts_diagonal_regularization() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    generate_into(&dir, "lsv-like", "tiny", 4);
    let out = btkkt_bin(&[
        "solve",
        dir.to_str().unwrap(),
        "--reg-delta",
        "1e-6",
        "--json",
    ]);
    assert!(out.status.success());
    let report = json_stdout(&out);
    assert_eq!(report["reg_delta"].as_f64().unwrap(), 1e-6);
    assert!(report["converged"].as_bool().unwrap());
}

#[test]
fn analyze_reports_identity_as_fully_reducible() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("eye.mtx");
    market::write_general(&path, &SparseMatrix::identity(5)).unwrap();

    let out = btkkt_bin(&["analyze", path.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let report = json_stdout(&out);
    assert_eq!(report["structural_rank"].as_u64().unwrap(), 5);
    assert!(report["structurally_nonsingular"].as_bool().unwrap());
    let btf = &report["btf"];
    assert_eq!(btf["blocks"].as_u64().unwrap(), 5);
    assert_eq!(btf["singleton_blocks"].as_u64().unwrap(), 5);
    assert!(!btf["irreducible"].as_bool().unwrap());
}

#[test]
fn analyze_detects_regularization_induced_irreducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = generate_preset("lsv-like", "tiny", 2).unwrap();
    let c = sys.assemble_pivot();
    let n_y = sys.n_y;

    let plain = tmp.path().join("pivot.mtx");
    market::write_general(&plain, &c).unwrap();
    let report = json_stdout(&btkkt_bin(&["analyze", plain.to_str().unwrap(), "--json"]));
    assert!(report["btf"]["blocks"].as_u64().unwrap() > 1);
    assert!(
        !report["btf"]["irreducible"].as_bool().unwrap(),
        "a matrix split into blocks must not be reported irreducible"
    );

    // A tiny shift on the zero block's diagonal welds the blocks together:
    // the permutation advantage is purely a property of the exact zeros.
    let mut t = c.canonical_triples();
    for i in n_y..2 * n_y {
        t.push((i, i, 1e-8));
    }
    let shifted = SparseMatrix::from_triplets(2 * n_y, 2 * n_y, t).unwrap();
    let reg = tmp.path().join("pivot_reg.mtx");
    market::write_general(&reg, &shifted).unwrap();
    let report = json_stdout(&btkkt_bin(&["analyze", reg.to_str().unwrap(), "--json"]));
    assert_eq!(report["btf"]["blocks"].as_u64().unwrap(), 1);
    assert!(report["btf"]["irreducible"].as_bool().unwrap());
}

#[test]
fn analyze_fill_lists_block_coordinates() {
    let tmp = tempfile::tempdir().unwrap();
    let s = 2usize;
    let m = two_block_saddle_pattern(s, false);
    let path = tmp.path().join("saddle.mtx");
    market::write_symmetric(&path, &m).unwrap();

    // Interior boundaries of the fixture partition [1, s-1, s, 1, s-1, s].
    let out = btkkt_bin(&[
        "analyze",
        path.to_str().unwrap(),
        "--pivot",
        "0",
        "--blocks",
        "1,2,4,5,6",
        "--json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json_stdout(&out);
    let fill = &report["fill"];
    assert_eq!(fill["pivot"].as_array().unwrap().len(), 1);

    let expected = symbolic_fill_1x1(&m, 0, &two_block_saddle_partition(s)).unwrap();
    assert_eq!(
        fill["fill_count"].as_u64().unwrap() as usize,
        expected.fill_count()
    );
    let entries: Vec<(usize, usize)> = fill["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|pair| {
            let p = pair.as_array().unwrap();
            (
                p[0].as_u64().unwrap() as usize,
                p[1].as_u64().unwrap() as usize,
            )
        })
        .collect();
    assert!(entries.iter().all(|e| expected.fill.contains(e)));
    // No fill reaches the final block (rows/cols 3s..4s, block index 5).
    assert!(entries.iter().all(|&(i, j)| i < 3 * s && j < 3 * s));
    for bf in fill["block_fill"].as_array().unwrap() {
        assert_ne!(bf["row_block"].as_u64().unwrap(), 5);
        assert_ne!(bf["col_block"].as_u64().unwrap(), 5);
    }
}

#[test]
fn analyze_handles_rectangular_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = generate_preset("lsv-like", "tiny", 3).unwrap();
    let path = tmp.path().join("b.mtx");
    market::write_general(&path, &sys.b).unwrap();

    let out = btkkt_bin(&["analyze", path.to_str().unwrap(), "--json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json_stdout(&out);
    assert_eq!(report["rows"].as_u64().unwrap() as usize, sys.b.nrows());
    assert_eq!(report["cols"].as_u64().unwrap() as usize, sys.b.ncols());
    assert!(
        report["btf"].is_null(),
        "no BTF section for rectangular input"
    );
    assert!(!report["structurally_nonsingular"].as_bool().unwrap());
    let rank = report["structural_rank"].as_u64().unwrap() as usize;
    assert!(rank >= 1 && rank <= sys.b.nrows().min(sys.b.ncols()));
    assert!(report["bipartite_components"].as_u64().unwrap() >= 1);
}

#[test]
fn analyze_rejects_fill_request_on_general_storage() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("gen.mtx");
    market::write_general(&path, &SparseMatrix::identity(3)).unwrap();
    let out = btkkt_bin(&["analyze", path.to_str().unwrap(), "--pivot", "0", "--json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_report_is_internally_consistent() {
    let out = btkkt_bin(&[
        "bench",
        "--preset",
        "lsv-like",
        "--scale",
        "tiny,small",
        "--seeds",
        "2",
        "--reps",
        "3",
        "--include-decoupled",
        "--json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json_stdout(&out);
    let rows = report["rows"].as_array().unwrap();
    // 2 scales x 2 seeds + 2 decoupled control rows.
    assert_eq!(rows.len(), 6);
    assert!(report["warnings"].as_array().unwrap().is_empty());

    let mut sum_structured_nnz = 0u64;
    let mut sum_natural_nnz = 0u64;
    let mut decoupled_rows = 0usize;
    for row in rows {
        let s = &row["structured"];
        assert!(s["converged"].as_bool().unwrap());
        assert!(s["inertia_target_met"].is_boolean());
        sum_structured_nnz += s["factor_nnz"].as_u64().unwrap();

        let base = &row["baseline_natural"];
        assert_eq!(base["outcome"].as_str().unwrap(), "completed");
        let base_nnz = base["factor_nnz"].as_u64().unwrap();
        sum_natural_nnz += base_nnz;
        assert!(s["factor_nnz"].as_u64().unwrap() < base_nnz);

        let ratio = row["nnz_ratio_natural"].as_f64().unwrap();
        let recomputed = base_nnz as f64 / s["factor_nnz"].as_u64().unwrap() as f64;
        assert!((ratio - recomputed).abs() <= 1e-9 * recomputed);

        assert!(row["agreement_natural"].as_f64().unwrap() <= 1e-7);
        assert!(row["agreement_reverse"].as_f64().unwrap() <= 1e-7);

        // Every instance here is small enough for the eigenvalue oracle.
        assert!(row["inertia_verified"].as_bool().unwrap());
        assert!(row["inertia_matches_oracle"].as_bool().unwrap());

        if row["instance"].as_str().unwrap().starts_with("decoupled/") {
            decoupled_rows += 1;
            assert_eq!(s["coupling_cols"].as_u64().unwrap(), 0);
            assert_eq!(s["flops"]["build_schur"].as_u64().unwrap(), 0);
        }
    }
    assert_eq!(decoupled_rows, 2);

    let totals = &report["totals"];
    assert_eq!(totals["instances"].as_u64().unwrap() as usize, rows.len());
    assert_eq!(totals["breakdowns"].as_u64().unwrap(), 0);
    assert_eq!(
        totals["structured_factor_nnz"].as_u64().unwrap(),
        sum_structured_nnz
    );
    assert_eq!(
        totals["baseline_natural_factor_nnz"].as_u64().unwrap(),
        sum_natural_nnz
    );
}

#[test]
fn bench_rejects_insufficient_repetitions() {
    let out = btkkt_bin(&["bench", "--reps", "2", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = json_stdout(&out);
    assert_eq!(err["error"]["class"].as_str().unwrap(), "structural");
}
