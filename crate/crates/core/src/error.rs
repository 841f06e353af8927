use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not connected")]
    Disconnected,
    #[error("edge {edge} has non-positive or non-finite length {length}")]
    BadLength { edge: usize, length: f64 },
    #[error("edge {edge} is a self-loop on vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex set is empty")]
    EmptySet,
    #[error("vertex {0} is not in the tree")]
    NotInTree(usize),
    #[error("vertices are not connected in the forest")]
    NotConnected,
    #[error("set {0} spans more than one tree of the forest")]
    SetSpansTrees(usize),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("decomposition does not belong to the supplied AKPW hierarchy")]
    HierarchyMismatch,
    #[error("edge {0} is never cut but the last level is not empty")]
    NeverCut(usize),
    #[error("instance has {size} vertices, limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("graph Laplacian has {0} zero eigenvalues")]
    Singular(usize),
    #[error("no trials requested")]
    NoTrials,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
