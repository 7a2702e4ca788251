//! Crate error type. Variants are grouped by the stage that produced them so
//! the command line front-end can map them onto stable exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh construction: {0}")]
    Mesh(String),

    #[error("fault construction: {0}")]
    Fault(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("assembly: {0}")]
    Assembly(String),

    #[error("linear solve: {0}")]
    Solve(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("property check failed: {0}")]
    Property(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<V> = std::result::Result<V, Error>;

impl Error {
    /// Stable process exit code for the CLI: 2 configuration/validation,
    /// 3 solver failure, 4 property-suite failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Mesh(_)
            | Error::Fault(_)
            | Error::Scenario(_)
            | Error::Config(_)
            | Error::Assembly(_) => 2,
            Error::Solve(_) => 3,
            Error::Property(_) => 4,
            Error::Analysis(_) | Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
