//! Batch experiments driven by a configuration file. Each command yields a
//! CSV table and a summary with pass/fail assertions.

pub mod config;
mod counting;
mod second_moment;
mod mc_vs_exact;
pub mod output;
mod sweep;
mod weighted_sum;

use std::str::FromStr;
use std::time::Instant;

pub use config::{ExperimentConfig, MethodChoice};
pub use output::{fmt_f64, Assertion, Report, Summary};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hypercube::{RNG_ALGORITHM, SEED_MIXING};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyEq1,
    ScalingSweep,
    CountingBounds,
    McVsExact,
    WeightedSumSweep,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::VerifyEq1,
        Command::ScalingSweep,
        Command::CountingBounds,
        Command::McVsExact,
        Command::WeightedSumSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyEq1 => "verify-eq1",
            Command::ScalingSweep => "scaling-sweep",
            Command::CountingBounds => "counting-bounds",
            Command::McVsExact => "mc-vs-exact",
            Command::WeightedSumSweep => "weighted-sum-sweep",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s}")))
    }
}

/// Command-line overrides of the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub method: Option<MethodChoice>,
    pub execution: Execution,
}

/// Shared state handed to every command.
pub(crate) struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    pub method: MethodChoice,
    pub execution: Execution,
}

/// What a command produces before the summary is assembled.
pub(crate) struct Outcome {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub method: String,
    pub spec_hashes: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    pub point_runtimes: Vec<f64>,
}

pub fn run(command: Command, cfg: &ExperimentConfig, config_hash: &str, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    let ctx = Context {
        cfg,
        seed: opts.seed.unwrap_or(cfg.seed),
        method: opts.method.unwrap_or(cfg.method),
        execution: opts.execution,
    };
    let outcome = match command {
        Command::VerifyEq1 => second_moment::run(&ctx)?,
        Command::ScalingSweep => sweep::run(&ctx)?,
        Command::CountingBounds => counting::run(&ctx)?,
        Command::McVsExact => mc_vs_exact::run(&ctx)?,
        Command::WeightedSumSweep => weighted_sum::run(&ctx)?,
    };
    let pass = outcome.assertions.iter().all(|a| a.pass);
    let execution = match opts.execution {
        Execution::Parallel if Execution::parallel_available() => "parallel",
        _ => "sequential",
    };
    Ok(Report {
        command: command.name(),
        header: outcome.header,
        rows: outcome.rows,
        summary: Summary {
            schema_version: config::SCHEMA_VERSION,
            command: command.name().into(),
            config_hash: config_hash.into(),
            master_seed: ctx.seed,
            rng_algorithm: RNG_ALGORITHM,
            seed_mixing: SEED_MIXING,
            method: outcome.method,
            execution: execution.into(),
            spec_hashes: outcome.spec_hashes,
            assertions: outcome.assertions,
            warnings: outcome.warnings,
            pass,
            runtime_seconds: start.elapsed().as_secs_f64(),
            point_runtimes_seconds: outcome.point_runtimes,
        },
    })
}

/// Process exit code for a finished or failed run.
pub fn exit_code(result: &Result<Report>) -> i32 {
    match result {
        Ok(r) if r.passed() => EXIT_PASS,
        Ok(_) => EXIT_ASSERTION,
        Err(e) => error_exit_code(e),
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Every ratio is at most `slack` times the larger of the first two.
pub(crate) fn bounded_rule(name: &str, ratios: &[f64], slack: f64) -> Assertion {
    if ratios.len() < 2 {
        return Assertion::skip(name, "fewer than two schedule points");
    }
    let cap = slack * ratios[0].max(ratios[1]);
    let worst = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Assertion::check(
        name,
        ratios.iter().all(|&r| r <= cap),
        format!("max ratio {worst:.6e} against cap {cap:.6e}"),
    )
}

/// `values[k+1] < values[k] + tol_k` along the schedule tail (entries 1..).
pub(crate) fn decreasing_tail(name: &str, values: &[f64], stderrs: &[f64], multiple: f64) -> Assertion {
    if values.len() < 3 {
        return Assertion::skip(name, "schedule tail has fewer than two points");
    }
    let mut failures = Vec::new();
    for k in 1..values.len() - 1 {
        let tol = multiple * stderrs[k].hypot(stderrs[k + 1]);
        if values[k + 1] >= values[k] + tol {
            failures.push(format!("{:.6e} -> {:.6e}", values[k], values[k + 1]));
        }
    }
    if failures.is_empty() {
        Assertion::check(name, true, "strictly decreasing from the second schedule point")
    } else {
        Assertion::check(name, false, format!("increases: {}", failures.join(", ")))
    }
}

pub(crate) fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}
