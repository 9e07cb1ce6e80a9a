//! Command-line front end: run scenarios, sweep parameter grids, execute
//! register scripts, and dump trap trajectory curves.
//!
//! Exit codes: 0 on success, 1 for configuration problems (bad flags, bad
//! config files, unknown presets), 2 when a valid configuration fails
//! numerically.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::process::ExitCode;

use coldgate::protocols::ScriptSpec;
use coldgate::scenario::{
    load_json, preset, preset_sweep, run_protocol, run_scenario, run_sweep, trajectory_trace,
    write_grid_csv, write_run_csv, write_trace_csv, ProtocolReport, Scenario, ScenarioError,
    SweepConfig, ToolInfo, UnitsNote, TOOL, UNITS,
};

#[derive(Parser)]
#[command(
    name = "coldgate",
    version,
    about = "Collisional phase gates in state-dependent moving traps",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario: gate fidelity per configured temperature.
    Run(RunArgs),
    /// Evaluate a scenario over a one- or two-axis parameter grid.
    Sweep(SweepArgs),
    /// Execute a register pulse-and-collision script.
    Protocol(ProtocolArgs),
    /// Sample the trap trajectory curves of a scenario.
    Lattice(LatticeArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<String>,
    /// Shipped preset (fig2, fig3).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Concurrent grid evaluations. The result is independent of this.
    #[arg(long, value_name = "N", default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct ProtocolArgs {
    /// JSON script file (a register script is always explicit).
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LatticeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Number of sample intervals across the evolution window.
    #[arg(long, value_name = "N", default_value_t = 400)]
    rows: usize,
}

/// Register-script output record.
#[derive(Serialize)]
struct ProtocolRecord {
    tool: ToolInfo,
    units: UnitsNote,
    report: ProtocolReport,
}

fn field_err(field: &'static str, message: &str) -> ScenarioError {
    ScenarioError::Field {
        field,
        message: message.into(),
    }
}

fn load_scenario(source: &SourceArgs) -> Result<Scenario, ScenarioError> {
    match (&source.config, &source.preset) {
        (Some(path), None) => load_json(path),
        (None, Some(name)) => preset(name),
        _ => Err(field_err("--config", "provide exactly one of --config or --preset")),
    }
}

fn load_sweep(source: &SourceArgs) -> Result<SweepConfig, ScenarioError> {
    match (&source.config, &source.preset) {
        (Some(path), None) => load_json(path),
        (None, Some(name)) => preset_sweep(name),
        _ => Err(field_err("--config", "provide exactly one of --config or --preset")),
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, ScenarioError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| ScenarioError::Json {
        context: "serializing output".into(),
        source,
    })?;
    text.push('\n');
    Ok(text)
}

fn emit(output: &OutputArgs, text: String) -> Result<(), ScenarioError> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|source| ScenarioError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| ScenarioError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn csv_buffer(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<String, ScenarioError> {
    let mut buffer = Vec::new();
    write(&mut buffer).map_err(|source| ScenarioError::Io {
        path: "<csv buffer>".into(),
        source,
    })?;
    Ok(String::from_utf8(buffer).expect("csv output is ascii"))
}

fn protocol_csv(report: &ProtocolReport) -> String {
    // Small registers get the full amplitude table; larger ones the summary.
    match &report.amplitudes {
        Some(rows) => {
            let mut text = String::from("levels,re,im\n");
            for row in rows {
                text.push_str(&format!("{},{},{}\n", row.levels, row.re, row.im));
            }
            text
        }
        None => {
            let mut text = String::from("n_atoms,norm_sqr,ghz_fidelity\n");
            let ghz = report
                .ghz_fidelity
                .map_or(String::new(), |f| f.to_string());
            text.push_str(&format!("{},{},{}\n", report.n_atoms, report.norm_sqr, ghz));
            text
        }
    }
}

fn run(cli: Cli) -> Result<(), ScenarioError> {
    match cli.command {
        Command::Run(args) => {
            let scenario = load_scenario(&args.source)?;
            let record = run_scenario(&scenario)?;
            let text = match args.output.format {
                Format::Json => to_pretty_json(&record)?,
                Format::Csv => csv_buffer(|w| write_run_csv(&record, w))?,
            };
            emit(&args.output, text)
        }
        Command::Sweep(args) => {
            let config = load_sweep(&args.source)?;
            let record = run_sweep(&config, args.workers)?;
            let text = match args.output.format {
                Format::Json => to_pretty_json(&record)?,
                Format::Csv => csv_buffer(|w| write_grid_csv(&record, w))?,
            };
            emit(&args.output, text)
        }
        Command::Protocol(args) => {
            let path = args.config.as_ref().ok_or_else(|| {
                field_err("--config", "the protocol verb needs a --config script file")
            })?;
            let script: ScriptSpec = load_json(path)?;
            let report = run_protocol(&script)?;
            let text = match args.output.format {
                Format::Json => to_pretty_json(&ProtocolRecord {
                    tool: TOOL,
                    units: UNITS,
                    report,
                })?,
                Format::Csv => protocol_csv(&report),
            };
            emit(&args.output, text)
        }
        Command::Lattice(args) => {
            let scenario = load_scenario(&args.source)?;
            let trace = trajectory_trace(&scenario, args.rows)?;
            let text = match args.output.format {
                Format::Json => to_pretty_json(&trace)?,
                Format::Csv => csv_buffer(|w| write_trace_csv(&trace, w))?,
            };
            emit(&args.output, text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let fine = matches!(
                err.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            );
            let _ = err.print();
            return ExitCode::from(if fine { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
