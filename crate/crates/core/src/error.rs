use thiserror::Error;

/// Errors produced by graph construction, the solver and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node `{node}`")]
    SelfLoop { line: usize, node: String },

    #[error("line {line}: edge ({u}, {v}) already has weight {existing}, got {weight}")]
    ConflictingWeight {
        line: usize,
        u: String,
        v: String,
        existing: f64,
        weight: f64,
    },

    #[error("node index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("cannot add {requested} edges: only {available} non-edges available")]
    InsufficientNonEdges { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{axis} {index} has no positive entry")]
    ZeroMarginal { axis: &'static str, index: usize },

    #[error("mirror step underflowed: {axis} {index} lost all mass; use a smaller step size")]
    StepUnderflow { axis: &'static str, index: usize },

    #[error("node {0} is isolated; weight-derived marginals need positive degrees")]
    IsolatedNode(usize),

    #[error("graph is not binary: weight {weight} on ({i}, {j})")]
    NonBinary { i: usize, j: usize, weight: f64 },

    #[error("pair ({source_node}, {target}) is not matched by the permutation (maps to {mapped})")]
    UnmatchedPair {
        source_node: usize,
        target: usize,
        mapped: usize,
    },

    #[error("instance of size {size} exceeds the enumeration limit of {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("ground-truth correspondence is empty")]
    EmptyTruth,

    #[error("duplicate source node `{0}` in correspondence")]
    DuplicateSource(String),

    #[error("unsupported format `{0}`")]
    UnsupportedFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
