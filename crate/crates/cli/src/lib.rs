//! Experiment runner behind the `exitgrid` binary.
//!
//! Every experiment produces CSV tables whose `#` preamble echoes the
//! configuration, the seed and a sha256 of the inputs. SVG plots, when
//! requested, are rendered from the CSV text alone.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod svg;
pub mod table;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use experiments::{execute, run, Check, Report};
