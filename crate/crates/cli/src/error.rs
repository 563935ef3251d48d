use std::fmt;

use thiserror::Error;

/// Failure category, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Config => 2,
            Self::Data => 3,
            Self::Numerical => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{stage}: {message}")]
pub struct StageError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl StageError {
    pub fn new(stage: &'static str, kind: ErrorKind, cause: impl fmt::Display) -> Self {
        Self { stage, kind, message: cause.to_string() }
    }

    pub fn config(stage: &'static str, cause: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Config, cause)
    }

    pub fn data(stage: &'static str, cause: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Data, cause)
    }

    pub fn numerical(stage: &'static str, cause: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Numerical, cause)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}
