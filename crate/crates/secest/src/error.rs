use secest_core::Error as CoreError;
use serde::Serialize;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed or inconsistent input. Exit code 1.
    Validation,
    /// Budget, plan or estimator hypotheses cannot be met. Exit code 2.
    Infeasible,
    /// A numerical routine failed or a verification check did not hold. Exit code 3.
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Infeasible => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, Serialize)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Infeasible,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Numerical,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.exit_code()
    }

    /// `{"error": {"kind": ..., "code": ..., "message": ...}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "code": self.exit_code(), "message": self.message }
        })
        .to_string()
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::DimensionMismatch(_)
            | CoreError::InvalidInput(_)
            | CoreError::DisconnectedGraph { .. }
            | CoreError::UndetectablePair
            | CoreError::TooManyAgents(_)
            | CoreError::RequiresCommonCosts => ErrorKind::Validation,
            CoreError::NoUndetectableAttack
            | CoreError::Infeasible { .. }
            | CoreError::InfeasibleBudget { .. }
            | CoreError::EmptyFeasibleSet
            | CoreError::EmptySecureSet
            | CoreError::HypothesisViolated(_)
            | CoreError::GainHypothesisViolated { .. }
            | CoreError::PlanInfeasible(_) => ErrorKind::Infeasible,
            CoreError::EigenFailure(_)
            | CoreError::MatrixTooLargeForExactTest { .. }
            | CoreError::NonIntegralVertex { .. }
            | CoreError::EmptyTrace => ErrorKind::Numerical,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::validation(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::validation(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
