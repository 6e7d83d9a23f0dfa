//! Command-line front end: drift expressions, run configuration files,
//! subcommands and CSV output.

pub mod config;
pub mod csv;
pub mod expr;
mod run;

pub use config::{
    load_config, parse_config_str, ConfigError, DriftSpec, McSettings, RunConfig, TimeGrid,
};
pub use csv::{format_value, write_csv, CsvError};
pub use expr::{parse_expression, DriftExpression, Expr, ExprError};
pub use run::{run_command, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
