use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown cell \"{0}\"")]
    UnknownCell(String),

    #[error("duplicate cell \"{0}\"")]
    DuplicateCell(String),

    #[error("net \"{net}\": pin {pin} out of range for cell \"{cell}\"")]
    DanglingPin {
        net: String,
        cell: String,
        pin: usize,
    },

    #[error("net \"{net}\": duplicate pin ({cell}, {pin})")]
    DuplicatePin {
        net: String,
        cell: String,
        pin: usize,
    },

    #[error("net \"{net}\": net arity < 2 ({pins} pins)")]
    NetArity { net: String, pins: usize },

    #[error("invalid cell \"{cell}\": {reason}")]
    InvalidCell { cell: String, reason: String },

    #[error("placement incomplete: expected {expected} cells, found {found}")]
    PlacementIncomplete { expected: usize, found: usize },

    #[error("duplicate placement row for cell \"{0}\"")]
    DuplicatePlacement(String),

    #[error("cell \"{0}\" lies outside die")]
    OutsideDie(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate point set: {0}")]
    DegeneratePointSet(String),

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("index {index} out of range for {op} (bound {bound})")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("parameter \"{0}\" requires a gradient but none was recorded")]
    MissingGrad(String),

    #[error("non-finite loss at epoch {epoch} on design \"{design}\"")]
    NonFiniteLoss { epoch: usize, design: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Syntax {
            line: e.line(),
            message: e.to_string(),
        }
    }
}
