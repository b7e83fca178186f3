//! Batch front end for `ghlab`: config handling, experiment runs and report files.

pub mod commands;
pub mod config;
pub mod output;
pub mod poly;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Compute(#[from] ghlab::Error),
    #[error(transparent)]
    Svg(#[from] svg::SvgError),
}

impl From<poly::PolyError> for CliError {
    fn from(e: poly::PolyError) -> Self {
        CliError::Config(format!("field 'poly': {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
