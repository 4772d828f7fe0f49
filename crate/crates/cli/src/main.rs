//! `lienard`: classify `x'' + f(x) x'^2 + g(x) = 0` by its Lie point
//! symmetries, or run the acceptance catalogue.

mod config;
mod report;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use lienard_core::selftest;

use config::{ClassifyArgs, Config, ConfigError};
use report::{Outcome, Report};

#[derive(Debug, Parser)]
#[command(name = "lienard", version, about = "Lie point-symmetry classification of quadratic Lienard equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify one equation, or every line of a batch file.
    Classify(ClassifyArgs),
    /// Run the acceptance catalogue and print a pass/fail table.
    Selftest {
        /// Only instances whose case key or name starts with this prefix
        /// (`ep`, `power`, `exp`, `inverse-cube`, `linear`, `generic`, `expr`).
        #[arg(long)]
        filter: Option<String>,
        /// Perturb one seeded generator; certification must then fail.
        #[arg(long, hide = true)]
        corrupt_fixture: bool,
    },
}

/// Exit codes: certain classification, input error, inconclusive.
const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Classify(args) => classify(&args),
        Command::Selftest { filter, corrupt_fixture } => selftest(filter, corrupt_fixture),
    };
    ExitCode::from(code)
}

fn diagnose(e: &ConfigError) {
    eprintln!("error: {e}");
    if let Some((text, position)) = e.location() {
        eprintln!("  {text}");
        eprintln!("  {}^", " ".repeat(position));
    }
}

fn classify(args: &ClassifyArgs) -> u8 {
    match &args.batch {
        Some(path) => batch(args, path),
        None => single(args),
    }
}

fn single(args: &ClassifyArgs) -> u8 {
    let config = match Config::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            diagnose(&e);
            return EXIT_INPUT;
        }
    };
    let report = Report::run(&config);
    let mut out = io::stdout().lock();
    let written = if config.json {
        writeln!(out, "{}", report.to_json(&config))
    } else {
        write!(out, "{}", report.to_text(&config))
    };
    if written.is_err() {
        return EXIT_INPUT;
    }
    exit_code(report.outcome())
}

fn exit_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Certain => EXIT_OK,
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// One JSON object per line, in input order. Lines are `f ; g`; blank lines
/// and lines starting with `#` are skipped.
fn batch(args: &ClassifyArgs, path: &str) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {path}: {e}");
            return EXIT_INPUT;
        }
    };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let results: Vec<(String, u8)> = lines
        .par_iter()
        .map(|&(number, line)| match Config::from_batch_line(args, line) {
            Ok(config) => {
                let report = Report::run(&config);
                let mut json = report.to_json(&config);
                json["line"] = number.into();
                (json.to_string(), exit_code(report.outcome()))
            }
            Err(e) => {
                eprintln!("line {number}: {e}");
                let json = serde_json::json!({ "line": number, "error": e.to_string() });
                (json.to_string(), EXIT_INPUT)
            }
        })
        .collect();
    let mut out = io::stdout().lock();
    for (json, _) in &results {
        if writeln!(out, "{json}").is_err() {
            return EXIT_INPUT;
        }
    }
    // input errors outrank inconclusive lines
    results.iter().map(|r| r.1).fold(EXIT_OK, |worst, c| match (worst, c) {
        (EXIT_INPUT, _) | (_, EXIT_INPUT) => EXIT_INPUT,
        (a, b) => a.max(b),
    })
}

fn selftest(filter: Option<String>, corrupt: bool) -> u8 {
    let options = selftest::Options {
        filter,
        corrupt_generator: corrupt,
    };
    let outcomes = selftest::run(&options);
    if outcomes.is_empty() {
        eprintln!("error: the filter selects no instances");
        return EXIT_INPUT;
    }
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if passed == outcomes.len() {
        EXIT_OK
    } else {
        EXIT_INPUT
    }
}
