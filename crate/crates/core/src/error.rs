use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable lists differ: [{left}] vs [{right}]")]
    VariableMismatch { left: String, right: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("symbol family has no member of order {0}")]
    MissingOrder(usize),

    #[error("family is not closed under contraction at order {0}")]
    NotAFamily(usize),

    #[error("cap {cap} is below the minimum order {min}")]
    CapTooSmall { cap: usize, min: usize },

    #[error("generators are linearly dependent at the evaluation point")]
    DependentGenerators,

    #[error("germ has a non-invertible linear part")]
    NonInvertibleLinearPart,

    #[error("prolongation rule has no finite lift")]
    NoFiniteLift,

    #[error("lift is not compatible with brackets: {0}")]
    BracketIncompatible(String),

    #[error("internal inconsistency: {0}")]
    OracleMismatch(String),

    #[error("parse error{}: {message}", line_suffix(*.line))]
    Parse { line: usize, message: String },
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(message: impl Into<String>) -> Self {
        Error::Parse {
            line: 0,
            message: message.into(),
        }
    }

    /// Attaches a line number to a parse error; other errors pass through.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Parse { message, .. } => Error::Parse { line, message },
            other => other,
        }
    }
}
