//! Harness error type with the process exit-code mapping: 2 for
//! configuration and IO problems, 3 for runtime contract violations, 1 for
//! verification failures.

use std::fmt;

#[derive(Debug)]
pub enum HarnessError {
    /// Bad configuration (parse errors, domain violations, unknown keys)
    /// or IO failure. Exit code 2.
    Config(String),
    /// A learner contract was violated at runtime. Exit code 3.
    Contract(String),
    /// Other runtime failure (numeric non-convergence). Exit code 3.
    Runtime(String),
}

pub type HarnessResult<T> = Result<T, HarnessError>;

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "config error: {msg}"),
            Self::Contract(msg) => write!(f, "contract violation: {msg}"),
            Self::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Contract(_) | Self::Runtime(_) => 3,
        }
    }
}

impl From<parafree::Error> for HarnessError {
    fn from(e: parafree::Error) -> Self {
        match &e {
            parafree::Error::Config(_) | parafree::Error::UnsupportedRegularizer(_) => {
                Self::Config(e.to_string())
            }
            parafree::Error::ContractViolation(_) => Self::Contract(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        Self::Config(format!("json: {e}"))
    }
}
