//! Configuration, execution and result files for the `gravdeco` binary.

pub mod config;
pub mod error;
pub mod grid_field;
pub mod manufactured;
pub mod run;

pub use config::{load_config, RunConfig};
pub use error::{CliError, CliResult};
pub use run::{execute, write_bundle, ResultBundle};
