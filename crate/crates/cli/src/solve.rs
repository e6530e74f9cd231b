//! `btkkt solve`: run one instance through the structured pipeline or the
//! baseline factorization and report residual, inertia, and work counters.

use std::path::PathBuf;
use std::time::Instant;

use btkkt::baseline::{sparse_ldlt_baseline, EliminationOrder};
use btkkt::generator::read_instance;
use btkkt::ldlt::Inertia;
use btkkt::market;
use btkkt::schur::{
    check_inertia_target, schur_factorize, solve_refined, DEFAULT_MAX_REFINE, DEFAULT_SOLVE_TOL,
};
use btkkt::Result;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::report::{baseline_solve_refined, block_nnz_of, dims_of, BlockNnz, Dims, PhaseFlops};

#[derive(Args)]
pub struct SolveArgs {
    /// Instance directory produced by `generate`.
    pub dir: PathBuf,
    #[arg(long, value_enum, default_value = "schur")]
    pub method: Method,
    /// Max-norm residual target for iterative refinement.
    #[arg(long, default_value_t = DEFAULT_SOLVE_TOL)]
    pub tol: f64,
    /// Refinement iteration cap.
    #[arg(long, default_value_t = DEFAULT_MAX_REFINE)]
    pub max_refine: usize,
    /// Shift added to the leading diagonal of the (1,1) block before
    /// factorizing (inertia-correction experiments).
    #[arg(long)]
    pub reg_delta: Option<f64>,
    /// Write the solution vector to this Matrix Market file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit the report as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    /// Schur-complement elimination through the block-triangular pivot.
    Schur,
    /// Generic sparse LBLᵀ in the given row order.
    BaselineNatural,
    BaselineReverse,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Schur => "schur",
            Method::BaselineNatural => "baseline-natural",
            Method::BaselineReverse => "baseline-reverse",
        }
    }
}

#[derive(Serialize)]
struct StructuredDetail {
    coupling_cols: usize,
    pivot_blocks: usize,
    flops: PhaseFlops,
    max_asymmetry: f64,
}

#[derive(Serialize)]
struct BaselineDetail {
    order: String,
    fill_nnz: usize,
    factor_flops: u64,
    solve_flops: u64,
    two_by_two_pivots: usize,
}

#[derive(Serialize)]
struct SolveTiming {
    factor_seconds: f64,
    solve_seconds: f64,
}

#[derive(Serialize)]
struct SolveOutcome {
    instance: String,
    method: &'static str,
    dims: Dims,
    nnz: BlockNnz,
    tol: f64,
    max_refine: usize,
    reg_delta: Option<f64>,
    residual: f64,
    refine_iterations: usize,
    converged: bool,
    inertia: Inertia,
    inertia_target_met: bool,
    factor_nnz: usize,
    structured: Option<StructuredDetail>,
    baseline: Option<BaselineDetail>,
    solution_file: Option<String>,
    timing: SolveTiming,
}

pub fn run(args: SolveArgs) -> Result<i32> {
    let mut sys = read_instance(&args.dir)?;
    if let Some(delta) = args.reg_delta {
        sys.a = sys.regularized_a(delta);
    }
    let full = sys.assemble_full();

    let outcome = match args.method {
        Method::Schur => {
            let started = Instant::now();
            let f = schur_factorize(&sys.a, &sys.b, &sys.w_yy, &sys.j, &sys.j_structure)?;
            let factor_seconds = started.elapsed().as_secs_f64();
            let started = Instant::now();
            let report = solve_refined(&f, &full, &sys.rhs, args.tol, args.max_refine)?;
            let solve_seconds = started.elapsed().as_secs_f64();
            SolveOutcome {
                instance: sys.label.clone(),
                method: args.method.name(),
                dims: dims_of(&sys),
                nnz: block_nnz_of(&sys, &full),
                tol: args.tol,
                max_refine: args.max_refine,
                reg_delta: args.reg_delta,
                residual: report.residual_norm,
                refine_iterations: report.iterations,
                converged: report.converged,
                inertia: report.inertia,
                inertia_target_met: check_inertia_target(report.inertia, sys.n_vars, sys.n_cons),
                factor_nnz: f.total_factor_nnz(),
                structured: Some(StructuredDetail {
                    coupling_cols: f.b_nonzero_cols().len(),
                    pivot_blocks: f.bt().structure().num_blocks(),
                    flops: PhaseFlops {
                        factor_pivot: f.factorize_c_flops(),
                        build_schur: f.build_s_flops(),
                        factor_schur: f.factorize_s_flops(),
                        total: f.factor_flops(),
                    },
                    max_asymmetry: f.max_asymmetry(),
                }),
                baseline: None,
                solution_file: None,
                timing: SolveTiming {
                    factor_seconds,
                    solve_seconds,
                },
            }
            .with_solution(&args, &report.x)?
        }
        Method::BaselineNatural | Method::BaselineReverse => {
            let order = match args.method {
                Method::BaselineReverse => EliminationOrder::Reverse,
                _ => EliminationOrder::Natural,
            };
            let started = Instant::now();
            let f = sparse_ldlt_baseline(&full, order)?;
            let factor_seconds = started.elapsed().as_secs_f64();
            let started = Instant::now();
            let refined = baseline_solve_refined(&f, &full, &sys.rhs, args.tol, args.max_refine)?;
            let solve_seconds = started.elapsed().as_secs_f64();
            SolveOutcome {
                instance: sys.label.clone(),
                method: args.method.name(),
                dims: dims_of(&sys),
                nnz: block_nnz_of(&sys, &full),
                tol: args.tol,
                max_refine: args.max_refine,
                reg_delta: args.reg_delta,
                residual: refined.residual,
                refine_iterations: refined.iterations,
                converged: refined.converged,
                inertia: f.inertia(),
                inertia_target_met: check_inertia_target(f.inertia(), sys.n_vars, sys.n_cons),
                factor_nnz: f.factor_nnz(),
                structured: None,
                baseline: Some(BaselineDetail {
                    order: format!("{order:?}").to_lowercase(),
                    fill_nnz: f.fill_nnz(),
                    factor_flops: f.factor_flops(),
                    solve_flops: refined.solve_flops,
                    two_by_two_pivots: f.two_by_two_count(),
                }),
                solution_file: None,
                timing: SolveTiming {
                    factor_seconds,
                    solve_seconds,
                },
            }
            .with_solution(&args, &refined.x)?
        }
    };

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&outcome).expect("report serialization")
        );
    } else {
        print_human(&outcome);
    }
    if outcome.converged {
        Ok(0)
    } else {
        if !args.json {
            eprintln!(
                "warning: residual {:.3e} above tol {:.3e} after {} refinements",
                outcome.residual, outcome.tol, outcome.refine_iterations
            );
        }
        Ok(3)
    }
}

impl SolveOutcome {
    fn with_solution(mut self, args: &SolveArgs, x: &[f64]) -> Result<Self> {
        if let Some(path) = &args.out {
            market::write_vector(path, x)?;
            self.solution_file = Some(path.display().to_string());
        }
        Ok(self)
    }
}

fn print_human(o: &SolveOutcome) {
    println!("instance    {}", o.instance);
    println!("method      {}", o.method);
    if let Some(delta) = o.reg_delta {
        println!("reg delta   {delta:e}");
    }
    println!(
        "dims        {} total ({} pivot, {} schur)",
        o.dims.matrix, o.dims.pivot, o.dims.schur
    );
    println!(
        "residual    {:.3e} after {} refinement(s){}",
        o.residual,
        o.refine_iterations,
        if o.converged { "" } else { "  NOT CONVERGED" }
    );
    println!(
        "inertia     ({}, {}, {}){}",
        o.inertia.positive,
        o.inertia.negative,
        o.inertia.zero,
        if o.inertia_target_met {
            "  matches (n, m, 0)"
        } else {
            ""
        }
    );
    println!("factor nnz  {}", o.factor_nnz);
    if let Some(s) = &o.structured {
        println!(
            "flops       pivot {} + build-schur {} + factor-schur {} = {}",
            s.flops.factor_pivot, s.flops.build_schur, s.flops.factor_schur, s.flops.total
        );
        println!(
            "coupling    {} nonzero column(s) of B across {} pivot blocks",
            s.coupling_cols, s.pivot_blocks
        );
    }
    if let Some(b) = &o.baseline {
        println!(
            "flops       factor {} + solve {} ({} 2x2 pivot(s), fill {})",
            b.factor_flops, b.solve_flops, b.two_by_two_pivots, b.fill_nnz
        );
    }
    if let Some(path) = &o.solution_file {
        println!("solution    {path}");
    }
}
