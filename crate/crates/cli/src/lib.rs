//! Persistence and experiment runners behind the `evfront` binary.

pub mod bank;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

pub use bundle::{ActivationBundle, Provenance};
pub use commands::{Front, ProbeAxis, Target};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
