use std::path::PathBuf;

/// Errors raised by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty logits")]
    EmptyLogits,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("backward requires a scalar root, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ambiguous referent")]
    AmbiguousReferent,

    #[error("expected exactly one <region> placeholder, found {0}")]
    Placeholder(usize),

    #[error("noun {0:?} not found in the referring expression")]
    NounNotFound(String),

    #[error("no tagged noun")]
    NoTaggedNoun,

    #[error("unbalanced <ins> markers")]
    UnbalancedMarkers,

    #[error("out-of-vocabulary word {0:?}")]
    OutOfVocabulary(String),

    #[error("scene too crowded")]
    SceneTooCrowded,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("undefined AUC")]
    UndefinedAuc,

    #[error("zero variance")]
    ZeroVariance,

    #[error("empty mask")]
    EmptyMask,

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("bad parameter file: {0}")]
    Format(String),

    #[error("unsupported parameter file version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("sample {id}: {source}")]
    Sample { id: u64, source: Box<Error> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
