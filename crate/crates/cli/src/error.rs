use std::fmt;

/// One problem found while validating a config, pinned to a field path such
/// as `base.coupling_q.matrix[0][1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<FieldError>),

    #[error("{0}")]
    Positivity(gme::Error),

    #[error("fixed point is unstable: {0}")]
    Unstable(String),

    #[error("jacobian routes disagree: {0}")]
    RouteMismatch(String),

    #[error("self-test failed: {0}")]
    SelfTest(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Positivity(_) => 3,
            CliError::Unstable(_) => 4,
            CliError::RouteMismatch(_) | CliError::SelfTest(_) => 5,
            CliError::Internal(_) => 6,
        }
    }

    pub fn field(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Validation(vec![FieldError { path: path.into(), reason: reason.into() }])
    }
}

impl From<gme::Error> for CliError {
    fn from(e: gme::Error) -> Self {
        match e {
            gme::Error::PositivityBreach { .. } => CliError::Positivity(e),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(format!("csv error: {e}"))
    }
}
