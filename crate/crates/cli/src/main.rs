// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noon_cli::{cmd_run, cmd_schedule, cmd_sweep, cmd_verify, Source, SweepOptions};
use noon_core::{CrosstalkMode, PulseModel};

#[derive(Parser)]
#[command(
    name = "noon",
    version,
    about = "Two-cavity NOON-state protocol simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol once and report the fidelity.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        /// Write the JSON result record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a parameter grid and write a CSV table.
    Sweep {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Add a wall_ms column (makes the file run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Print the segment table of the configured protocol.
    Schedule {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Run the built-in oracle checks.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Averaged,
}

#[derive(Clone, Copy, ValueEnum)]
enum PulsesArg {
    Dynamic,
    Instantaneous,
}

#[derive(Args)]
struct SourceArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset (fig3, fig4, ideal) instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Crosstalk treatment.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Pulse model.
    #[arg(long, value_enum)]
    pulses: Option<PulsesArg>,
}

impl From<SourceArgs> for Source {
    fn from(a: SourceArgs) -> Self {
        Source {
            config: a.config,
            preset: a.preset,
            mode: a.mode.map(|m| match m {
                ModeArg::Exact => CrosstalkMode::Exact,
                ModeArg::Averaged => CrosstalkMode::Averaged,
            }),
            pulses: a.pulses.map(|p| match p {
                PulsesArg::Dynamic => PulseModel::Dynamic,
                PulsesArg::Instantaneous => PulseModel::Instantaneous,
            }),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { source, out } => {
            cmd_run(&source.into(), out.as_deref()).map(|_| ExitCode::SUCCESS)
        }
        Command::Sweep {
            source,
            out,
            workers,
            timings,
        } => cmd_sweep(
            &source.into(),
            &SweepOptions {
                out,
                workers,
                timings,
            },
        )
        .map(|s| {
            eprintln!(
                "{} rows ({} computed, {} failed)",
                s.rows, s.computed, s.failed
            );
            if s.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }),
        Command::Schedule { source } => cmd_schedule(&source.into()).map(|table| {
            print!("{table}");
            ExitCode::SUCCESS
        }),
        Command::Verify => {
            let (report, ok) = cmd_verify();
            print!("{report}");
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
