use hrrt_core::hrrt::{EnumerationError, IterationError, ReflectionError};
use hrrt_core::model::{LineageError, PatchError, WorkspaceError};
use hrrt_core::pddl::PddlError;
use hrrt_core::riskmit::{PolicyError, SimError, WeightsError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotFound(String),
    /// The request does not fit the current phase of a session.
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    ResourceLimit(String),
    /// The blue agent could not be reached.
    #[error("{0}")]
    Unavailable(String),
    #[error("{0}")]
    Internal(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::ResourceLimit(_) => 3,
            _ => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::NotFound(_) => "not-found",
            Error::Conflict(_) => "phase-conflict",
            Error::Validation(_) => "validation",
            Error::ResourceLimit(_) => "resource-limit",
            Error::Unavailable(_) => "agent-unavailable",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<WorkspaceError> for Error {
    fn from(e: WorkspaceError) -> Self {
        match e {
            WorkspaceError::IoFailure { .. } => Error::Internal(e.to_string()),
            _ => Error::Validation(e.to_string()),
        }
    }
}

impl From<LineageError> for Error {
    fn from(e: LineageError) -> Self {
        match e {
            LineageError::UnknownHypothesis(_) => Error::NotFound(e.to_string()),
            _ => Error::Validation(e.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {
        $(impl From<$t> for Error {
            fn from(e: $t) -> Self {
                Error::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(PatchError, PddlError, EnumerationError, SimError, WeightsError, PolicyError);

impl From<ReflectionError> for Error {
    fn from(e: ReflectionError) -> Self {
        match e {
            ReflectionError::AgentUnavailable { .. } => Error::Unavailable(e.to_string()),
            other => Error::Validation(other.to_string()),
        }
    }
}

impl From<IterationError> for Error {
    fn from(e: IterationError) -> Self {
        match e {
            IterationError::Lineage(l) => l.into(),
            IterationError::Reflection(r) => r.into(),
            other => Error::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Internal(e.to_string())
    }
}
