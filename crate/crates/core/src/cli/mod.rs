//! Configuration, CSV files and the drivers behind the `ellipalign` binary.

pub mod config;
pub mod io;
pub mod run;

pub use config::{parse_config, Artifact, FitSpec, RunConfig};
pub use run::{
    a2_grid, run_fit, run_scan, run_simulate, run_synth, run_tables, simulate, RunOptions, Simulation,
};

/// Reads and parses a config file.
pub fn load_config(path: &std::path::Path) -> crate::Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
