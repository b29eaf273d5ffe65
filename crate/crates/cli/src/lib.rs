// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Configuration, output formats and subcommands of the `noon` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{
    cmd_run, cmd_schedule, cmd_sweep, cmd_verify, Source, SweepOptions, SweepSummary,
};
pub use config::ConfigFile;
