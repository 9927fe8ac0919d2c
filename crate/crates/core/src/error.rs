use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("coherence failure: {0}")]
    Coherence(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("grade overflow: needed grade {needed}, bound is {bound}")]
    GradeOverflow { needed: usize, bound: usize },
}

impl Error {
    /// Exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) | Error::GradeOverflow { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
