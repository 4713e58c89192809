use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A focus transform was evaluated outside its domain.
    #[error("domain error in {component}: {message}")]
    Domain { component: String, message: String },

    #[error("infeasible covariance: {0}")]
    InfeasibleCovariance(String),

    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular information matrix (condition number {condition:.3e})")]
    SingularInformation { condition: f64 },

    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(component: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Domain {
            component: component.into(),
            message: message.into(),
        }
    }

    /// Prefixes a domain error's component with a candidate label, leaving
    /// other variants untouched.
    pub fn with_candidate(self, label: &str) -> Self {
        match self {
            Error::Domain { component, message } => Error::Domain {
                component: format!("{label}: {component}"),
                message,
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
