use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rulekit::battery::{self, Scale};
use rulekit::scenario::{self, Report, Scenario};

/// Finite-universe laboratory for rules, followers and their certificates.
#[derive(Parser)]
#[command(name = "rulekit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, taking the operation from the file.
    Run(RunArgs),
    /// List operations, their inputs and anchors.
    List {
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the acceptance battery.
    Suite {
        #[arg(long, default_value = "small")]
        scale: Scale,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only these criteria (repeatable).
        #[arg(long)]
        only: Vec<u8>,
        /// Record wall-clock time in the report (breaks byte-identical reruns).
        #[arg(long)]
        timing: bool,
    },
    /// `rulekit <operation> --scenario file.json`
    #[command(external_subcommand)]
    Operation(Vec<String>),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Report path; defaults to the scenario's `output`, else standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    timing: bool,
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct OperationCli {
    operation: String,
    #[command(flatten)]
    args: RunArgs,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(None, &args),
        Command::Operation(words) => {
            let parsed = OperationCli::try_parse_from(&words).unwrap_or_else(|e| e.exit());
            if scenario::find_operation(&parsed.operation).is_none() {
                anyhow::bail!("unknown operation {:?}; see `rulekit list`", parsed.operation);
            }
            run(Some(&parsed.operation), &parsed.args)
        }
        Command::List { json } => {
            list(json);
            Ok(0)
        }
        Command::Suite {
            scale,
            seed,
            out,
            only,
            timing,
        } => suite(scale, seed, &only, out.as_deref(), timing),
    }
}

fn run(operation: Option<&str>, args: &RunArgs) -> Result<u8> {
    let text =
        std::fs::read_to_string(&args.scenario).with_context(|| format!("reading {}", args.scenario.display()))?;
    let scenario = Scenario::from_json(&text).with_context(|| format!("parsing {}", args.scenario.display()))?;
    let start = Instant::now();
    let mut report = scenario::run_scenario(&scenario, operation, args.seed);
    if args.timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    let out = args.out.clone().or_else(|| scenario.output.as_ref().map(PathBuf::from));
    emit(&report, out.as_deref())?;
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    for v in &report.violations {
        eprintln!("violated: {v}");
    }
    Ok(report.status.exit_code() as u8)
}

fn emit(report: &Report, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "{} [{}]: {:?} -> {}",
                report.scenario,
                report.operation,
                report.status,
                path.display()
            );
        }
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

fn list(as_json: bool) {
    let ops = scenario::list_operations();
    if as_json {
        let rows: Vec<_> = ops
            .iter()
            .map(|op| {
                serde_json::json!({
                    "name": op.public_name(),
                    "module": op.module,
                    "anchor": op.anchor,
                    "inputs": op.inputs,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&rows).expect("plain JSON"));
        return;
    }
    println!("{:<26} {:<14} {:<38} inputs", "operation", "module", "anchor");
    for op in ops {
        println!(
            "{:<26} {:<14} {:<38} {}",
            op.public_name(),
            op.module,
            op.anchor,
            op.inputs
        );
    }
}

fn suite(scale: Scale, seed: u64, only: &[u8], out: Option<&Path>, timing: bool) -> Result<u8> {
    if let Some(bad) = only.iter().find(|&&id| !(1..=11).contains(&id)) {
        anyhow::bail!("--only {bad}: criteria are numbered 1 to 11");
    }
    let start = Instant::now();
    let mut report = battery::suite(seed, scale, only);
    if timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    if let Some(criteria) = report.certificates["criteria"].as_array() {
        for c in criteria {
            eprintln!(
                "criterion {:>2} {}: {}",
                c["id"].as_u64().unwrap_or(0),
                if c["passed"] == true { "PASS" } else { "FAIL" },
                c["title"].as_str().unwrap_or("")
            );
        }
    }
    emit(&report, out)?;
    Ok(report.status.exit_code() as u8)
}
