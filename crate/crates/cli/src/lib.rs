//! Configuration, replica orchestration, persistence and plotting for the
//! `moran` command-line tool.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;
pub mod summary;

pub use config::{ExperimentConfig, Kind};
pub use error::CliError;
pub use plot::{emit_plot, render_svg, PlotKind};
pub use run::{run_experiment, run_with_threads};
pub use summary::Summary;
