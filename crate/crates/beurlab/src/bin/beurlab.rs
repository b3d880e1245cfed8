//! Batch front end: one experiment per invocation, a deterministic report
//! on the way out, and an exit code that a harness can act on.
//!
//! ```text
//! beurlab <command> [--config <file>] [--key <value>]... [--out <path>] [--format csv|json]
//! ```
//!
//! Settings resolve in order: built-in defaults, then the configuration
//! file, then `--key value` overrides, later ones winning.

use beurlab::config::ExperimentConfig;
use beurlab::experiment::{run_experiment, COMMANDS};
use beurlab::report::Verdict;
use beurlab::Error;
use std::process::ExitCode;

const USAGE: &str = "\
beurlab — numerical experiments on Beurling-regular growth

Usage:
  beurlab <command> [--config <file>] [--key <value>]... [--out <path>] [--format csv|json]

Commands:
  popa-check      Residuals of the circle-group laws over seeded random triples
  kernel-check    Functional-equation residuals of the closed-form kernels
  timechange      Paced increments of a conjugated observable against the exponential shape
  tau-increment   Occupation-time increments against their limit shape
  limit           Paced-increment limit estimate along a geometric grid
  limsup          Upper-limit variant of `limit`
  window-limsup   Windowed-supremum variant of `limit`
  heiberg-seneta  Window suprema at shrinking shift scales
  tauberian       Convergence transfer between moving-average kernels
  beck            Growth chains: envelopes, iteration, recurrence, log-growth scan
  represent       Linear-plus-remainder representation, forward or reverse
  riesz           Flow-weighted mean next to its windowed average

Options:
  --config <file>   Read key=value settings (one per line, `#` comments)
  --key <value>     Override any setting for the chosen command (repeatable)
  --out <path>      Write the report to a file instead of stdout
  --format <fmt>    Report format: csv (default) or json
  --help            Show this message

Environment:
  BEURLAB_THREADS   Worker threads for parallel scans (0 or 1 forces serial)

Exit codes:
  0  no failure (every check passed or stayed undecided)
  1  at least one check failed
  2  usage or configuration error
  3  the run aborted before producing results
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("beurlab: {e}");
            eprintln!("run `beurlab --help` for usage");
            ExitCode::from(2)
        }
    }
}

fn run(args: &[String]) -> Result<ExitCode, Error> {
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h") {
        print!("{USAGE}");
        return Ok(ExitCode::SUCCESS);
    }
    let command = args[0].clone();
    if command.starts_with('-') {
        return Err(Error::Config {
            what: format!(
                "expected a command before the flags, got `{command}` \
                 (commands: {})",
                COMMANDS.join(", ")
            ),
        });
    }

    let mut config_path: Option<String> = None;
    let mut out_path: Option<String> = None;
    let mut format = "csv".to_string();
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut rest = args[1..].iter();
    while let Some(flag) = rest.next() {
        let key = flag.strip_prefix("--").ok_or_else(|| Error::Config {
            what: format!("unexpected argument `{flag}` (settings are passed as --key value)"),
        })?;
        let value = rest.next().ok_or_else(|| Error::Config {
            what: format!("flag `--{key}` needs a value"),
        })?;
        match key {
            "config" => config_path = Some(value.clone()),
            "out" => out_path = Some(value.clone()),
            "format" => format = value.clone(),
            _ => overrides.push((key.to_string(), value.clone())),
        }
    }
    if format != "csv" && format != "json" {
        return Err(Error::Config {
            what: format!("unknown format `{format}` (expected csv or json)"),
        });
    }

    let mut cfg = match &config_path {
        Some(path) => ExperimentConfig::load(&command, path)?,
        None => ExperimentConfig::new(&command),
    };
    for (key, value) in overrides {
        cfg.set(&key, &value);
    }

    let report = run_experiment(&cfg)?;
    let text = report.render(&format)?;
    match &out_path {
        Some(path) => std::fs::write(path, &text).map_err(|e| Error::Io {
            what: format!("cannot write `{path}`: {e}"),
        })?,
        None => print!("{text}"),
    }
    Ok(match report.verdict {
        Verdict::Pass | Verdict::Undecided => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(1),
        Verdict::Aborted => ExitCode::from(3),
    })
}
