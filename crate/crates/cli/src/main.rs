use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sptrsv_cli::{
    cmd_compare, cmd_compile, cmd_gen, cmd_run, cmd_sweep_psum, emit, to_csv, write_atomic, CliError, CliResult,
    GenKind, GenParams, RunConfig,
};

#[derive(Parser)]
#[command(name = "sptrsv", version, about = "Compile and simulate sparse triangular solves on a dataflow accelerator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a Matrix Market file to a program container.
    Compile {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write compile statistics as JSON here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Simulate a matrix or a compiled program and verify the solution.
    Run {
        /// Matrix Market file, or a program container.
        input: PathBuf,
        /// Source matrix, needed to verify a program container.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        no_verify: bool,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Cycles and blocking cycles across psum file capacities, as CSV.
    SweepPsum {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8")]
        capacities: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Throughput of coarse, medium, medium+psum and medium+psum+ICR, as CSV.
    Compare {
        /// Matrix Market files; `dataflow-example` names the built-in three-CU example.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Generate a synthetic lower-triangular matrix.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        params: GenParams,
    },
}

fn io(e: anyhow::Error) -> CliError {
    CliError::Internal(e)
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Compile { input, output, report, cfg } => {
            let out = cmd_compile(&input, &cfg)?;
            write_atomic(&output, &out.program.to_bytes()).map_err(io)?;
            for w in out.program.capacity_warnings() {
                eprintln!("warning: {w}");
            }
            let text = serde_json::to_string_pretty(&out.summary()).context("serialising report").map_err(io)? + "\n";
            emit(report.as_deref(), &text).map_err(io)
        }
        Command::Run { input, matrix, no_verify, report, cfg } => {
            let r = cmd_run(&input, matrix.as_deref(), !no_verify, &cfg)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            emit(report.as_deref(), &(r.to_json() + "\n")).map_err(io)
        }
        Command::SweepPsum { input, capacities, output, cfg } => {
            let rows = cmd_sweep_psum(&input, &cfg, &capacities)?;
            emit(output.as_deref(), &to_csv(&rows).map_err(io)?).map_err(io)
        }
        Command::Compare { inputs, output, cfg } => {
            let rows = cmd_compare(&inputs, &cfg)?;
            emit(output.as_deref(), &to_csv(&rows).map_err(io)?).map_err(io)
        }
        Command::Gen { kind, output, params } => {
            let m = cmd_gen(kind, &params)?;
            emit(output.as_deref(), &m.to_matrix_market()).map_err(io)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
