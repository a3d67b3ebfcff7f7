//! `drpkit` command-line front end: benchmark experiments, coverage on external
//! sample files, CSV/SVG output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod samples;

pub use commands::run;
pub use config::RunConfig;
pub use error::CliError;
pub use output::CoverageCsv;
