use std::fmt;

/// A single data-validation failure, located by a field path such as `A.colptr[3]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    pub path: String,
    pub message: String,
}

impl ValidationIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid sparse matrix: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{} validation error(s): {}", .0.len(), join_issues(.0))]
    Validation(Vec<ValidationIssue>),

    #[error("zero pivot at column {column} of the LDL factorization")]
    ZeroPivot { column: usize },

    #[error("conjugate gradient hit its {iterations} iteration cap with relative residual {residual:e}")]
    CgNotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
