//! `fls`: JSON in, JSON out front end for the frobenius-like library.
//!
//! Exit codes: 0 on success, 2 on domain errors (with `{"error": {"code", "message"}}`),
//! 1 on internal errors and I/O failures.

mod commands;
mod input;
mod output;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frobenius_like::arrangements::ArrangementOptions;
use frobenius_like::fd::{FdOptions, DEFAULT_RELATIVE_STEP};
use frobenius_like::frobenius::FrobeniusOptions;
use frobenius_like::systems::{BaseMatching, DEFAULT_GOOD_BOUND, DEFAULT_STRONG_BOUND};
use frobenius_like::{Error, Execution};
use serde_json::{json, Value};

use crate::commands::Settings;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "fls", version, about = "Matroid partitions, systems and Frobenius like structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Args, Debug, Clone)]
struct Options {
    /// Input JSON file; `-` or absent reads stdin.
    #[arg(global = true, long, short = 'i')]
    input: Option<PathBuf>,
    /// Output file; absent writes stdout.
    #[arg(global = true, long, short = 'o')]
    output: Option<PathBuf>,
    /// Relative finite-difference step.
    #[arg(global = true, long = "h", default_value_t = DEFAULT_RELATIVE_STEP)]
    h: f64,
    /// Tolerance for coefficient spreads and flatness checks.
    #[arg(global = true, long, env = "FLS_TOLERANCE", default_value_t = 1e-6)]
    tol: f64,
    /// Truncation degree of the potential of the second kind [default: mk + 3].
    #[arg(global = true, long)]
    n_max: Option<usize>,
    /// Enumeration bound for good and strong decompositions.
    #[arg(global = true, long)]
    bound: Option<usize>,
    /// Match bases position by position in the local relation.
    #[arg(global = true, long)]
    strict_order: bool,
    /// Allow arrangements with k >= 2 (multistart Newton, best effort).
    #[arg(global = true, long)]
    allow_k_ge_2: bool,
    /// Plain central differences without Richardson extrapolation.
    #[arg(global = true, long)]
    no_richardson: bool,
    /// Run everything on the current thread.
    #[arg(global = true, long)]
    sequential: bool,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Rank of a set or the list of bases.
    #[command(subcommand)]
    Matroid(MatroidCommand),
    /// Partition the ground set into independent sets, or find a deficiency witness.
    Partition,
    /// A_min and A_par for matroids plus a uniform tail.
    Amin,
    /// Good decompositions of a system and their equivalence classes.
    Equivalence,
    /// A strong decomposition of a system, or a capacity witness.
    StrongDecompose,
    /// Potentials of the first and second kind of an arrangement.
    Potentials,
    /// Axiom residuals of the structure of an arrangement.
    VerifyArrangement,
}

#[derive(Subcommand, Debug, Clone)]
enum MatroidCommand {
    Rank,
    Bases,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Matroid(MatroidCommand::Rank) => "matroid rank",
            Command::Matroid(MatroidCommand::Bases) => "matroid bases",
            Command::Partition => "partition",
            Command::Amin => "amin",
            Command::Equivalence => "equivalence",
            Command::StrongDecompose => "strong-decompose",
            Command::Potentials => "potentials",
            Command::VerifyArrangement => "verify-arrangement",
        }
    }
}

enum Failure {
    Domain(Error),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_domain_error() {
            Failure::Domain(e)
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

impl Options {
    fn settings(&self) -> Result<Settings, Error> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Schema(format!("--{name} must be a positive number, got {v}")))
            }
        };
        let h = positive("h", self.h)?;
        let tol = positive("tol", self.tol)?;
        if self.n_max == Some(0) || self.bound == Some(0) {
            return Err(Error::Schema("--n-max and --bound must be at least 1".into()));
        }
        let exec = if self.sequential { Execution::Sequential } else { Execution::Parallel };
        let defaults = FrobeniusOptions::default();
        let frobenius = FrobeniusOptions {
            fd: FdOptions { h, richardson: !self.no_richardson },
            tolerance: tol,
            hard_threshold: defaults.hard_threshold.max(tol),
            exec,
            good_bound: self.bound.unwrap_or(DEFAULT_GOOD_BOUND),
            strong_bound: self.bound.unwrap_or(DEFAULT_STRONG_BOUND),
            ..defaults
        };
        let arrangement = ArrangementOptions { allow_k_ge_2: self.allow_k_ge_2, ..Default::default() };
        Ok(Settings {
            frobenius,
            arrangement,
            n_max: self.n_max,
            matching: if self.strict_order { BaseMatching::Strict } else { BaseMatching::Unordered },
            exec,
        })
    }

    fn read_input(&self) -> io::Result<String> {
        match &self.input {
            Some(path) if path.as_os_str() != "-" => fs::read_to_string(path),
            _ => {
                let mut text = String::new();
                io::stdin().read_to_string(&mut text)?;
                Ok(text)
            }
        }
    }

    fn write_output(&self, text: &str) -> io::Result<()> {
        match &self.output {
            Some(path) => fs::write(path, text),
            None => io::stdout().write_all(text.as_bytes()),
        }
    }
}

fn dispatch(command: &Command, text: &str, s: &Settings) -> Result<Value, Error> {
    match command {
        Command::Matroid(MatroidCommand::Rank) => commands::matroid_rank(text),
        Command::Matroid(MatroidCommand::Bases) => commands::matroid_bases(text),
        Command::Partition => commands::partition(text),
        Command::Amin => commands::amin(text, s),
        Command::Equivalence => commands::equivalence(text, s),
        Command::StrongDecompose => commands::strong_decompose(text, s),
        Command::Potentials => commands::potentials(text, s),
        Command::VerifyArrangement => commands::verify(text, s),
    }
}

fn run(cli: &Cli) -> Result<Value, Failure> {
    let settings = cli.options.settings()?;
    let text = cli
        .options
        .read_input()
        .map_err(|e| Failure::Internal(format!("cannot read input: {e}")))?;
    Ok(dispatch(&cli.command, &text, &settings)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let (document, code) = match run(&cli) {
        Ok(result) => (json!({ "version": VERSION, "command": command, "result": result }), 0),
        Err(Failure::Domain(e)) => (
            json!({
                "version": VERSION,
                "command": command,
                "error": { "code": e.code(), "message": e.to_string() },
            }),
            2,
        ),
        Err(Failure::Internal(message)) => (
            json!({
                "version": VERSION,
                "command": command,
                "error": { "code": "internal", "message": message },
            }),
            1,
        ),
    };
    if let Err(e) = cli.options.write_output(&output::render(&document)) {
        eprintln!("fls: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
