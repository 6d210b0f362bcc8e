use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use walshprod::experiments::{
    self, error_exit_code, Command, ExperimentConfig, MethodChoice, RunOptions, EXIT_CONFIG,
};
use walshprod::Execution;

#[derive(Parser)]
#[command(name = "walshprod", version, about = "Expected products of random Fourier-Walsh matrices")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact second-moment identity over a grid of cases
    VerifyEq1(Common),
    /// Operator norm of E[M] against the degree scale over a d schedule
    ScalingSweep(Common),
    /// Binary-matrix counts against their closed-form bounds
    CountingBounds(Common),
    /// Exact engine against the Monte Carlo estimator on one spec
    McVsExact(Common),
    /// Weighted monomial sums against their scales over a d schedule
    WeightedSumSweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed, overriding the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (1 runs sequentially)
    #[arg(long)]
    threads: Option<usize>,
    /// Force the exact engine
    #[arg(long, conflicts_with = "mc")]
    exact: bool,
    /// Force Monte Carlo estimation
    #[arg(long)]
    mc: bool,
}

fn configure_threads(threads: Option<usize>) -> Result<Execution, String> {
    match threads {
        Some(0) => Err("--threads must be positive".into()),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map(|_| Execution::Parallel)
            .map_err(|e| e.to_string()),
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::Parallel),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::VerifyEq1(a) => (Command::VerifyEq1, a),
        Cmd::ScalingSweep(a) => (Command::ScalingSweep, a),
        Cmd::CountingBounds(a) => (Command::CountingBounds, a),
        Cmd::McVsExact(a) => (Command::McVsExact, a),
        Cmd::WeightedSumSweep(a) => (Command::WeightedSumSweep, a),
    };
    let execution = match configure_threads(args.threads) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let (cfg, hash) = match ExperimentConfig::load(&args.config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(error_exit_code(&e) as u8);
        }
    };
    let opts = RunOptions {
        seed: args.seed,
        method: match (args.exact, args.mc) {
            (true, _) => Some(MethodChoice::Exact),
            (_, true) => Some(MethodChoice::Mc),
            _ => None,
        },
        execution,
    };
    let result = experiments::run(command, &cfg, &hash, &opts);
    let result = result.and_then(|report| report.write(&args.out).map(|_| report));
    match &result {
        Ok(report) => {
            for w in &report.summary.warnings {
                eprintln!("warning: {w}");
            }
            for a in &report.summary.assertions {
                let status = match (a.skipped, a.pass) {
                    (true, _) => "SKIP",
                    (false, true) => "PASS",
                    (false, false) => "FAIL",
                };
                println!("{status} {}: {}", a.name, a.detail);
            }
            println!(
                "wrote {} and summary.json to {}",
                format_args!("{}.csv", report.command),
                args.out.display()
            );
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(experiments::exit_code(&result) as u8)
}
