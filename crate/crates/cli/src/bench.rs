//! `btkkt bench`: run the structured solver and the no-reordering baseline
//! over preset instances, reporting fill, FLOP, residual, and timing data per
//! instance plus aggregate totals.

use std::path::PathBuf;
use std::time::Instant;

use btkkt::baseline::{sparse_ldlt_baseline, BaselineFactors, EliminationOrder};
use btkkt::generator::{
    generate_kkt, generate_preset, instance_presets, GeneratorParams, KKTSystem, PRESET_NAMES,
    SCALE_NAMES,
};
use btkkt::jacobi::inertia_oracle;
use btkkt::ldlt::Inertia;
use btkkt::net::Activation;
use btkkt::schur::{
    check_inertia_target, schur_factorize, solve_refined, SchurFactors, SolveReport,
    DEFAULT_MAX_REFINE, DEFAULT_SOLVE_TOL,
};
use btkkt::{Error, Result, SymmetricSparse};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::report::{
    baseline_solve_refined, block_nnz_of, dims_of, median_seconds, relative_max_diff, BlockNnz,
    Dims, PhaseFlops,
};

/// Instances at or below this dimension get their inertia re-checked against
/// the eigenvalue oracle.
const ORACLE_DIM_CAP: usize = 300;

#[derive(Args)]
pub struct BenchArgs {
    /// Presets to run, comma separated (default: all).
    #[arg(long = "preset", value_delimiter = ',')]
    pub presets: Vec<String>,
    /// Scales to run, comma separated (default: all).
    #[arg(long = "scale", value_delimiter = ',')]
    pub scales: Vec<String>,
    /// Seeds per cell, numbered from 1.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    /// Timing repetitions per phase; the median is reported. At least 3.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SOLVE_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_REFINE)]
    pub max_refine: usize,
    /// Add a control cell with an empty coupling block (B = 0).
    #[arg(long)]
    pub include_decoupled: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit the report as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize, Deserialize)]
pub struct BenchConfig {
    pub presets: Vec<String>,
    pub scales: Vec<String>,
    pub seeds: Vec<u64>,
    pub repetitions: usize,
    pub tol: f64,
    pub max_refine: usize,
    pub include_decoupled: bool,
}

#[derive(Serialize, Deserialize)]
pub struct StructuredStats {
    pub factor_nnz: usize,
    pub coupling_cols: usize,
    pub flops: PhaseFlops,
    pub max_asymmetry: f64,
    pub residual: f64,
    pub refine_iterations: usize,
    pub converged: bool,
    pub inertia: Inertia,
    pub inertia_target_met: bool,
}

#[derive(Serialize, Deserialize)]
pub struct BaselineStats {
    pub factor_nnz: usize,
    pub fill_nnz: usize,
    pub factor_flops: u64,
    pub solve_flops: u64,
    pub two_by_two_pivots: usize,
    pub residual: f64,
    pub refine_iterations: usize,
    pub converged: bool,
    pub inertia: Inertia,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum BaselineResult {
    Completed(BaselineStats),
    Breakdown { step: usize },
}

impl BaselineResult {
    fn completed(&self) -> Option<&BaselineStats> {
        match self {
            BaselineResult::Completed(s) => Some(s),
            BaselineResult::Breakdown { .. } => None,
        }
    }
}

/// Wall-clock medians; everything in here varies run to run, unlike the rest
/// of the row, which is bit-reproducible for a fixed seed.
#[derive(Serialize, Deserialize)]
pub struct RowTiming {
    /// Generation plus assembly; excluded from the speedup ratio.
    pub init_seconds: f64,
    pub structured_factor_seconds: f64,
    pub structured_solve_seconds: f64,
    pub baseline_natural_factor_seconds: Option<f64>,
    pub baseline_natural_solve_seconds: Option<f64>,
    pub baseline_reverse_factor_seconds: Option<f64>,
    pub baseline_reverse_solve_seconds: Option<f64>,
    /// baseline (factor + solve) / structured (factor + solve).
    pub speedup_natural: Option<f64>,
    pub speedup_reverse: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub preset: String,
    pub scale: String,
    pub seed: u64,
    pub dims: Dims,
    pub nnz: BlockNnz,
    pub structured: StructuredStats,
    pub baseline_natural: BaselineResult,
    pub baseline_reverse: BaselineResult,
    /// baseline / structured factor nonzeros; absent on breakdown.
    pub nnz_ratio_natural: Option<f64>,
    pub nnz_ratio_reverse: Option<f64>,
    /// baseline / structured factorization FLOPs; absent on breakdown.
    pub flop_ratio_natural: Option<f64>,
    pub flop_ratio_reverse: Option<f64>,
    /// Max-norm solution difference relative to the structured solution.
    pub agreement_natural: Option<f64>,
    pub agreement_reverse: Option<f64>,
    pub inertia_verified: bool,
    pub inertia_matches_oracle: Option<bool>,
    pub timing: RowTiming,
}

#[derive(Serialize, Deserialize, Default)]
pub struct Totals {
    pub instances: usize,
    pub breakdowns: usize,
    pub refine_iterations: u64,
    pub structured_factor_nnz: u64,
    pub structured_factor_flops: u64,
    pub baseline_natural_factor_nnz: u64,
    pub baseline_natural_factor_flops: u64,
    pub baseline_reverse_factor_nnz: u64,
    pub baseline_reverse_factor_flops: u64,
}

#[derive(Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub totals: Totals,
    pub warnings: Vec<String>,
}

/// Control instance with no A-side constraints and no input coupling, so the
/// coupling block is structurally empty.
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

struct StructuredRun {
    factors: SchurFactors,
    report: SolveReport,
    factor_seconds: f64,
    solve_seconds: f64,
}

fn run_structured(
    sys: &KKTSystem,
    full: &SymmetricSparse,
    reps: usize,
    tol: f64,
    max_refine: usize,
) -> Result<StructuredRun> {
    let mut factor_samples = Vec::with_capacity(reps);
    let mut factors = None;
    for _ in 0..reps {
        let t = Instant::now();
        let f = schur_factorize(&sys.a, &sys.b, &sys.w_yy, &sys.j, &sys.j_structure)?;
        factor_samples.push(t.elapsed().as_secs_f64());
        factors = Some(f);
    }
    let factors = factors.expect("repetitions enforced >= 3");
    let mut solve_samples = Vec::with_capacity(reps);
    let mut report = None;
    for _ in 0..reps {
        let t = Instant::now();
        let r = solve_refined(&factors, full, &sys.rhs, tol, max_refine)?;
        solve_samples.push(t.elapsed().as_secs_f64());
        report = Some(r);
    }
    Ok(StructuredRun {
        factors,
        report: report.expect("repetitions enforced >= 3"),
        factor_seconds: median_seconds(&mut factor_samples),
        solve_seconds: median_seconds(&mut solve_samples),
    })
}

struct BaselineRun {
    result: BaselineResult,
    x: Option<Vec<f64>>,
    factor_seconds: Option<f64>,
    solve_seconds: Option<f64>,
}

fn run_baseline(
    full: &SymmetricSparse,
    rhs: &[f64],
    order: EliminationOrder,
    reps: usize,
    tol: f64,
    max_refine: usize,
) -> Result<BaselineRun> {
    let mut factor_samples = Vec::with_capacity(reps);
    let mut factors: Option<BaselineFactors> = None;
    for _ in 0..reps {
        let t = Instant::now();
        match sparse_ldlt_baseline(full, order) {
            Ok(f) => {
                factor_samples.push(t.elapsed().as_secs_f64());
                factors = Some(f);
            }
            Err(Error::Breakdown { step }) => {
                return Ok(BaselineRun {
                    result: BaselineResult::Breakdown { step },
                    x: None,
                    factor_seconds: None,
                    solve_seconds: None,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let factors = factors.expect("repetitions enforced >= 3");
    let mut solve_samples = Vec::with_capacity(reps);
    let mut refined = None;
    for _ in 0..reps {
        let t = Instant::now();
        let r = baseline_solve_refined(&factors, full, rhs, tol, max_refine)?;
        solve_samples.push(t.elapsed().as_secs_f64());
        refined = Some(r);
    }
    let refined = refined.expect("repetitions enforced >= 3");
    Ok(BaselineRun {
        result: BaselineResult::Completed(BaselineStats {
            factor_nnz: factors.factor_nnz(),
            fill_nnz: factors.fill_nnz(),
            factor_flops: factors.factor_flops(),
            solve_flops: refined.solve_flops,
            two_by_two_pivots: factors.two_by_two_count(),
            residual: refined.residual,
            refine_iterations: refined.iterations,
            converged: refined.converged,
            inertia: factors.inertia(),
        }),
        x: Some(refined.x),
        factor_seconds: Some(median_seconds(&mut factor_samples)),
        solve_seconds: Some(median_seconds(&mut solve_samples)),
    })
}

fn bench_cell(
    preset: &str,
    scale: &str,
    seed: u64,
    sys: KKTSystem,
    init_seconds: f64,
    args: &BenchArgs,
    warnings: &mut Vec<String>,
) -> Result<BenchRow> {
    let full = sys.assemble_full();
    let structured = run_structured(&sys, &full, args.reps, args.tol, args.max_refine)?;
    let s_nnz = structured.factors.total_factor_nnz();
    let s_flops = structured.factors.factor_flops();
    let s_time = structured.factor_seconds + structured.solve_seconds;

    let (inertia_verified, inertia_matches_oracle) = if sys.dim() <= ORACLE_DIM_CAP {
        let oracle = inertia_oracle(&full)?;
        (true, Some(oracle == structured.report.inertia))
    } else {
        (false, None)
    };

    let mut ratios = [None; 4];
    let mut agreements = [None; 2];
    let mut timings = [None, None, None, None];
    let mut speedups = [None; 2];
    let mut results = Vec::with_capacity(2);
    for (k, order) in [EliminationOrder::Natural, EliminationOrder::Reverse]
        .into_iter()
        .enumerate()
    {
        let run = run_baseline(&full, &sys.rhs, order, args.reps, args.tol, args.max_refine)?;
        if let Some(stats) = run.result.completed() {
            ratios[2 * k] = Some(stats.factor_nnz as f64 / s_nnz as f64);
            ratios[2 * k + 1] = Some(stats.factor_flops as f64 / s_flops as f64);
            agreements[k] = run
                .x
                .as_deref()
                .map(|xb| relative_max_diff(&structured.report.x, xb));
            let b_time = run.factor_seconds.unwrap_or(0.0) + run.solve_seconds.unwrap_or(0.0);
            if s_time > 0.0 {
                speedups[k] = Some(b_time / s_time);
            }
        } else if let BaselineResult::Breakdown { step } = run.result {
            warnings.push(format!(
                "{}: baseline ({order:?}) broke down at step {step}; excluded from ratios",
                sys.label
            ));
        }
        timings[2 * k] = run.factor_seconds;
        timings[2 * k + 1] = run.solve_seconds;
        results.push(run.result);
    }
    let baseline_reverse = results.pop().expect("two baseline orders");
    let baseline_natural = results.pop().expect("two baseline orders");

    Ok(BenchRow {
        instance: sys.label.clone(),
        preset: preset.to_string(),
        scale: scale.to_string(),
        seed,
        dims: dims_of(&sys),
        nnz: block_nnz_of(&sys, &full),
        structured: StructuredStats {
            factor_nnz: s_nnz,
            coupling_cols: structured.factors.b_nonzero_cols().len(),
            flops: PhaseFlops {
                factor_pivot: structured.factors.factorize_c_flops(),
                build_schur: structured.factors.build_s_flops(),
                factor_schur: structured.factors.factorize_s_flops(),
                total: s_flops,
            },
            max_asymmetry: structured.factors.max_asymmetry(),
            residual: structured.report.residual_norm,
            refine_iterations: structured.report.iterations,
            converged: structured.report.converged,
            inertia: structured.report.inertia,
            inertia_target_met: check_inertia_target(
                structured.report.inertia,
                sys.n_vars,
                sys.n_cons,
            ),
        },
        baseline_natural,
        baseline_reverse,
        nnz_ratio_natural: ratios[0],
        flop_ratio_natural: ratios[1],
        nnz_ratio_reverse: ratios[2],
        flop_ratio_reverse: ratios[3],
        agreement_natural: agreements[0],
        agreement_reverse: agreements[1],
        inertia_verified,
        inertia_matches_oracle,
        timing: RowTiming {
            init_seconds,
            structured_factor_seconds: structured.factor_seconds,
            structured_solve_seconds: structured.solve_seconds,
            baseline_natural_factor_seconds: timings[0],
            baseline_natural_solve_seconds: timings[1],
            baseline_reverse_factor_seconds: timings[2],
            baseline_reverse_solve_seconds: timings[3],
            speedup_natural: speedups[0],
            speedup_reverse: speedups[1],
        },
    })
}

fn accumulate(totals: &mut Totals, row: &BenchRow) {
    totals.instances += 1;
    totals.refine_iterations += row.structured.refine_iterations as u64;
    totals.structured_factor_nnz += row.structured.factor_nnz as u64;
    totals.structured_factor_flops += row.structured.flops.total;
    for (result, nnz, flops) in [
        (
            &row.baseline_natural,
            &mut totals.baseline_natural_factor_nnz,
            &mut totals.baseline_natural_factor_flops,
        ),
        (
            &row.baseline_reverse,
            &mut totals.baseline_reverse_factor_nnz,
            &mut totals.baseline_reverse_factor_flops,
        ),
    ] {
        match result.completed() {
            Some(stats) => {
                *nnz += stats.factor_nnz as u64;
                *flops += stats.factor_flops;
            }
            None => totals.breakdowns += 1,
        }
    }
}

pub fn run(args: BenchArgs) -> Result<i32> {
    if args.reps < 3 {
        return Err(Error::InvalidParameter(format!(
            "at least 3 repetitions required, got {}",
            args.reps
        )));
    }
    if args.seeds < 1 {
        return Err(Error::InvalidParameter("at least one seed required".into()));
    }
    let presets: Vec<String> = if args.presets.is_empty() {
        PRESET_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.presets.clone()
    };
    let scales: Vec<String> = if args.scales.is_empty() {
        SCALE_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.scales.clone()
    };
    let seeds: Vec<u64> = (1..=args.seeds).collect();
    // Fail on an unknown preset or scale before any cell runs.
    for preset in &presets {
        for scale in &scales {
            instance_presets(preset, scale)?;
        }
    }

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut totals = Totals::default();
    for preset in &presets {
        for scale in &scales {
            for &seed in &seeds {
                let t = Instant::now();
                let sys = generate_preset(preset, scale, seed)?;
                let init_seconds = t.elapsed().as_secs_f64();
                let row = bench_cell(preset, scale, seed, sys, init_seconds, &args, &mut warnings)?;
                accumulate(&mut totals, &row);
                rows.push(row);
            }
        }
    }
    if args.include_decoupled {
        for &seed in &seeds {
            let t = Instant::now();
            let mut sys = generate_kkt(&decoupled_params(seed))?;
            sys.label = format!("decoupled/control/seed{seed}");
            let init_seconds = t.elapsed().as_secs_f64();
            let row = bench_cell(
                "decoupled",
                "control",
                seed,
                sys,
                init_seconds,
                &args,
                &mut warnings,
            )?;
            accumulate(&mut totals, &row);
            rows.push(row);
        }
    }

    let report = BenchReport {
        config: BenchConfig {
            presets,
            scales,
            seeds,
            repetitions: args.reps,
            tol: args.tol,
            max_refine: args.max_refine,
            include_decoupled: args.include_decoupled,
        },
        rows,
        totals,
        warnings,
    };

    let json = serde_json::to_string_pretty(&report).expect("report serialization");
    if let Some(path) = &args.out {
        std::fs::write(path, json.clone() + "\n")?;
    }
    if args.json {
        println!("{json}");
    } else {
        print_human(&report);
    }
    Ok(0)
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:6.2}"),
        None => format!("{:>6}", "-"),
    }
}

fn print_human(report: &BenchReport) {
    println!(
        "{:<26} {:>5} {:>8} {:>8} {:>6} {:>8} {:>6} {:>9} {:>3} {:>6} {:>6}",
        "instance",
        "dim",
        "s-nnz",
        "n-nnz",
        "ratio",
        "r-nnz",
        "ratio",
        "resid",
        "it",
        "spd-n",
        "spd-r"
    );
    for row in &report.rows {
        let (n_nnz, r_nnz) = (
            row.baseline_natural
                .completed()
                .map(|s| s.factor_nnz.to_string())
                .unwrap_or_else(|| "broke".into()),
            row.baseline_reverse
                .completed()
                .map(|s| s.factor_nnz.to_string())
                .unwrap_or_else(|| "broke".into()),
        );
        println!(
            "{:<26} {:>5} {:>8} {:>8} {} {:>8} {} {:>9.1e} {:>3} {} {}",
            row.instance,
            row.dims.matrix,
            row.structured.factor_nnz,
            n_nnz,
            fmt_opt(row.nnz_ratio_natural),
            r_nnz,
            fmt_opt(row.nnz_ratio_reverse),
            row.structured.residual,
            row.structured.refine_iterations,
            fmt_opt(row.timing.speedup_natural),
            fmt_opt(row.timing.speedup_reverse),
        );
    }
    let t = &report.totals;
    println!(
        "totals: {} instance(s), factor nnz {} structured vs {} natural / {} reverse, \
         factor flops {} vs {} / {}, {} breakdown(s)",
        t.instances,
        t.structured_factor_nnz,
        t.baseline_natural_factor_nnz,
        t.baseline_reverse_factor_nnz,
        t.structured_factor_flops,
        t.baseline_natural_factor_flops,
        t.baseline_reverse_factor_flops,
        t.breakdowns
    );
    for warning in &report.warnings {
        println!("warning: {warning}");
    }
}
