//! Front end for `forge-core`: problem files in, reports out.

pub mod problem;
pub mod report;

use std::path::Path;

use thiserror::Error;

pub use problem::{Kind, ProblemFile};
pub use report::{analyze, Options, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Core(#[from] forge_core::Error),
    #[error("file has kind `{found}`, command expects `{expected}`")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
}

impl CliError {
    /// 1 input/output, 2 parse, 3 dimension or validation, 4 oracle
    /// disagreement.
    pub fn exit_code(&self) -> i32 {
        use forge_core::Error as E;
        match self {
            CliError::Io { .. } => 1,
            CliError::WrongKind { .. } => 2,
            CliError::Core(e) => match e {
                E::Parse { .. } | E::UnknownVariable(_) => 2,
                E::OracleMismatch(_) => 4,
                _ => 3,
            },
        }
    }
}

/// Reads, checks the kind and analyzes.
pub fn run_file(path: &Path, expected: Kind, opts: &Options) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    run_text(&text, expected, opts)
}

pub fn run_text(text: &str, expected: Kind, opts: &Options) -> Result<Report, CliError> {
    let problem = ProblemFile::parse(text)?;
    if problem.kind != expected {
        return Err(CliError::WrongKind {
            expected: expected.name(),
            found: problem.kind.name(),
        });
    }
    Ok(analyze(&problem, opts)?)
}
