//! Sweep configuration, persistence and the `spreadlab` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod record;
pub mod selftest;
pub mod sweep;

pub use config::SweepConfig;
pub use error::{HarnessError, Result};
pub use record::{read_csv, read_sidecar, write_csv, CellReport, Sidecar, SweepRecord, CSV_COLUMNS};
pub use sweep::{cell_seed, run_cell, run_sweep, SweepOutcome};
