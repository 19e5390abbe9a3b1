use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use codiff::harness::{self, RunConfig};
use codiff::problems::list_problems;
use codiff::Trace;

#[derive(Parser)]
#[command(name = "codiff", version, about = "Codifferential descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a JSON config and write its trace.
    ///
    /// Exit status: 0 stationary, 2 iteration limit, 3 line-search stall,
    /// 1 on a bad config.
    Run {
        config: PathBuf,
        /// Print the trace rows as CSV to stdout as well.
        #[arg(long)]
        print: bool,
    },
    /// Run a check suite (`all` runs every suite).
    ///
    /// Exit status: 0 all checks pass, 2 some check failed, 1 unknown suite.
    Check {
        suite: String,
        /// Emit the reports as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Fit the convergence rate of a saved JSON trace.
    Rate {
        trace: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        fstar: f64,
        /// Noise floor on `f - fstar`; defaults to `10 eps |fstar|`.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// List the registered problems.
    ListProblems,
}

/// `dir/stem.trace.<ext>` next to the config file.
fn default_output(config: &Path, ext: &str) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    config.with_file_name(format!("{stem}.trace.{ext}"))
}

fn cmd_run(path: &Path, print: bool) -> Result<u8> {
    let mut cfg = RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    cfg.csv.get_or_insert_with(|| default_output(path, "csv"));
    cfg.json.get_or_insert_with(|| default_output(path, "json"));
    let t = harness::run(&cfg)?;
    if print {
        print!("{}", t.to_csv_string()?);
    }
    let code = harness::exit_code(t.termination);
    log::info!("wrote {} and {}", cfg.csv.as_ref().unwrap().display(), cfg.json.as_ref().unwrap().display());
    println!(
        "{:?} after {} iterations: f = {:.12e}, omega = {:.3e}",
        t.termination,
        t.iterations(),
        t.final_f(),
        t.final_omega()
    );
    Ok(code as u8)
}

fn cmd_check(suite: &str, json: bool) -> Result<u8> {
    let reports = match harness::check(suite) {
        Ok(r) => r,
        Err(e @ codiff::Error::UnknownSuite(_)) => {
            eprintln!("error: {e}; known suites: all, {}", harness::SUITES.join(", "));
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            for c in &r.checks {
                println!("[{}] {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, r.suite, c.name, c.detail);
            }
            println!("{}: {} passed, {} failed", r.suite, r.passed(), r.failed());
        }
    }
    Ok(if reports.iter().all(|r| r.failed() == 0) { 0 } else { 2 })
}

fn cmd_rate(path: &Path, f_star: f64, floor: Option<f64>) -> Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let t = Trace::from_json(&text)?;
    let r = harness::rate_fit_above(&t, f_star, floor.unwrap_or_else(|| harness::noise_floor(f_star)));
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Run { config, print } => cmd_run(&config, print),
        Command::Check { suite, json } => cmd_check(&suite, json),
        Command::Rate { trace, fstar, floor } => cmd_rate(&trace, fstar, floor),
        Command::ListProblems => {
            for (name, about) in list_problems() {
                println!("{name:<20} {about}");
            }
            Ok(0)
        }
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
