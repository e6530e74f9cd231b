//! Command-line driver: instance generation, structured and baseline solves,
//! structural analysis, and solver comparison benchmarks.

mod analyze;
mod bench;
mod generate;
mod report;
mod solve;

use btkkt::ErrorClass;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "btkkt",
    version,
    about = "Structured Schur-complement solver for NN-constrained KKT systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic KKT instance directory.
    Generate(generate::GenerateArgs),
    /// Solve an instance with the structured or the baseline method.
    Solve(solve::SolveArgs),
    /// Structural analysis of a Matrix Market file (no numeric work).
    Analyze(analyze::AnalyzeArgs),
    /// Compare the structured solver against the baseline across presets.
    Bench(bench::BenchArgs),
}

impl Command {
    fn json(&self) -> bool {
        match self {
            Command::Generate(a) => a.json,
            Command::Solve(a) => a.json,
            Command::Analyze(a) => a.json,
            Command::Bench(a) => a.json,
        }
    }
}

fn class_name(class: ErrorClass) -> &'static str {
    match class {
        ErrorClass::Structural => "structural",
        ErrorClass::Numeric => "numeric",
        ErrorClass::Io => "io",
    }
}

fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Structural => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Io => 4,
    }
}

fn run(command: Command) -> btkkt::Result<i32> {
    match command {
        Command::Generate(args) => generate::run(args),
        Command::Solve(args) => solve::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Bench(args) => bench::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    let json = cli.command.json();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            let class = err.class();
            if json {
                let payload = serde_json::json!({
                    "error": { "class": class_name(class), "message": err.to_string() }
                });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&payload).expect("error payload")
                );
            } else {
                eprintln!("error: {err}");
            }
            exit_code(class)
        }
    };
    std::process::exit(code);
}
