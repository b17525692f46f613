use thiserror::Error;

/// Errors produced by format handling, density arithmetic and term analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested computation would have to enumerate too many values.
    #[error("infeasible: {0}")]
    Feasibility(String),

    #[error("singular division: divisor `{operand}` has zero in its support")]
    SingularDivision { operand: String },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    /// A variable occurs more than once, so the term is not tree-shaped.
    #[error("variable `{variable}` occurs {} times (at {}); only tree-shaped terms are supported",
        positions.len(), format_positions(positions))]
    TreeViolation {
        variable: String,
        positions: Vec<(usize, usize)>,
    },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported semantics: {0}")]
    UnsupportedSemantics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_positions(positions: &[(usize, usize)]) -> String {
    positions
        .iter()
        .map(|(l, c)| format!("{l}:{c}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
