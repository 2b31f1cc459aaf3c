//! File formats, reports and commands behind the `jaynes` binary.

pub mod commands;
pub mod error;
pub mod examples;
pub mod files;
pub mod report;

pub use commands::{cmd_analyze, cmd_evolve, cmd_fit, cmd_verify, Context, FitMode, Outcome};
pub use error::CliError;
pub use examples::generate_examples;
