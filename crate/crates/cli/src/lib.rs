//! Configuration, orchestration and report formats for the `floquet-phase`
//! command-line tool.
//!
//! The numerical work lives in `floquet-phase-core`; this crate reads TOML
//! run files, fans independent work out over threads, and writes JSON, text
//! and CSV outputs whose bytes depend only on the configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the range checks

pub mod analysis;
pub mod config;
pub mod report;
pub mod scan;

pub use analysis::{analyze, Analysis};
pub use config::RunConfig;
pub use scan::{run_scan, ScanRow};
