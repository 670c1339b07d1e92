mod pipeline;
mod problem;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mahler::parse_rational;
use serde_json::json;

use pipeline::Command;
use problem::{build_system, parse_problem, Num, Options, Settings};

#[derive(Parser)]
#[command(name = "mahler", version, about = "Mahler-type functional equations: series, certified values, independence and measure bounds")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Series solution to order N with an exact residual check
    Solve(Args),
    /// Orbit of y under p and the basin certificate
    Orbit(Args),
    /// Non-vanishing hypotheses along the orbit and the independence criterion
    Check(Args),
    /// Certified values f_i(y)
    Eval(Args),
    /// Admissible dimensions, measure exponents and transcendence-degree bounds
    Bounds(Args),
    /// Integer-relation search and measure consistency on the values
    Probe(Args),
    /// Every stage
    Full(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Problem file (JSON)
    problem: PathBuf,
    /// Working precision in bits
    #[arg(long)]
    precision: Option<u32>,
    /// Series truncation order N
    #[arg(long)]
    truncation: Option<usize>,
    /// Target radius for evaluated values
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Relation-probe degree bound D
    #[arg(long = "max-degree")]
    max_degree: Option<u32>,
    /// Relation-probe height bound H
    #[arg(long = "max-height")]
    max_height: Option<u64>,
    /// Measure constant C compared against the fitted one
    #[arg(long = "constant-C")]
    constant_c: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    theorem: Option<u8>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples for the measure-consistency probe
    #[arg(long)]
    trials: Option<usize>,
    /// Omit stage timings so reports are byte-identical across runs
    #[arg(long = "no-timing")]
    no_timing: bool,
    /// JSON report only (default)
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Also print a human-readable summary to stderr
    #[arg(long)]
    text: bool,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn flag_num(name: &str, v: &Option<String>) -> Result<Option<Num>, String> {
    v.as_ref().map(|s| parse_rational(s).map(Num).map_err(|e| format!("--{name}: {e}"))).transpose()
}

impl Args {
    fn overrides(&self) -> Result<Options, String> {
        Ok(Options {
            precision_bits: self.precision,
            truncation: self.truncation,
            tol: flag_num("tol", &self.tol)?,
            epsilon: flag_num("epsilon", &self.epsilon)?,
            max_degree: self.max_degree,
            max_height: self.max_height,
            c: flag_num("constant-C", &self.constant_c)?,
            theorem: self.theorem,
            seed: self.seed,
            trials: self.trials,
        })
    }
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (command, args) = match &cli.command {
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Orbit(a) => (Command::Orbit, a),
        Sub::Check(a) => (Command::Check, a),
        Sub::Eval(a) => (Command::Eval, a),
        Sub::Bounds(a) => (Command::Bounds, a),
        Sub::Probe(a) => (Command::Probe, a),
        Sub::Full(a) => (Command::Full, a),
    };
    let text = match std::fs::read_to_string(&args.problem) {
        Ok(t) => t,
        Err(e) => return input_error(format!("cannot read {}: {e}", args.problem.display())),
    };
    let problem = match parse_problem(&text) {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    let overrides = match args.overrides() {
        Ok(o) => o,
        Err(e) => return input_error(e),
    };
    let settings = match Settings::resolve(&problem.options, &overrides) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let system = match build_system(&problem) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };

    let outcome = pipeline::run(command, &system, &problem.y.0, &settings, !args.no_timing);
    let report = json!({
        "tool": "mahler",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "problem": problem,
        "settings": settings.to_options(),
        "stages": outcome.stages,
        "exit_code": outcome.exit_code,
    });
    let mut body = serde_json::to_string_pretty(&report).expect("report serializes");
    body.push('\n');
    let written = match &args.out {
        Some(path) => std::fs::write(path, &body),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if args.text {
        eprint!("{}", outcome.text);
    }
    ExitCode::from(outcome.exit_code as u8)
}
