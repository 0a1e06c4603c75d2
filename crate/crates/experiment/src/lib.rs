//! Experiment driver for the IRS sum-rate schemes: configuration files,
//! Monte-Carlo sweeps, CSV tables and SVG charts.

pub mod config;
pub mod plot;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig, SweepSpec, SweepVariable};
pub use plot::{plot_svg, render_svg, PlotError};
pub use sweep::{run_sweep, write_csv, write_csv_to, SweepRow, SweepTable};

/// Largest element count run without `--full-scale`.
pub const DESK_SCALE_ELEMENTS: usize = 64;
