use swim_core::Error as CoreError;

/// Failure of a subcommand, split by who has to act on it.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable inputs, malformed files.
    #[error("{0}")]
    User(String),
    /// Something went wrong inside a run that valid input should not cause.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        Self::User(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::User(_) => 1,
            Self::Internal(_) => 2,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Sample { id, source } => match CliError::from(*source) {
                Self::User(m) => Self::User(format!("sample {id}: {m}")),
                Self::Internal(m) => Self::Internal(format!("sample {id}: {m}")),
            },
            CoreError::Io { .. }
            | CoreError::Parse { .. }
            | CoreError::Config(_)
            | CoreError::Format(_)
            | CoreError::UnsupportedVersion { .. }
            | CoreError::OutOfVocabulary(_)
            | CoreError::InvalidArgument(_)
            | CoreError::SceneTooCrowded
            | CoreError::AmbiguousReferent => Self::User(e.to_string()),
            other => Self::Internal(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
