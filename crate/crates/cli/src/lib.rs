//! Configuration, outputs and subcommands behind the `hotwall` binary.

pub mod commands;
pub mod config;
pub mod output;
