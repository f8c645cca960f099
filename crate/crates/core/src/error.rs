use thiserror::Error;

/// Errors produced by the library.
///
/// `Internal` is reserved for conditions that indicate a bug or a broken
/// invariant (for example an optimum outside its proven bounds); everything
/// else reports a problem with the caller's input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ambient edge count m must be at least 3, got {0}")]
    AmbientTooSmall(u32),

    #[error("generator index {index} out of range 1..={max} for rank-{max} words")]
    GeneratorRange { index: u32, max: u32 },

    #[error("mismatched ambient graphs: m = {0} vs m = {1}")]
    MismatchedAmbient(u32, u32),

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),

    #[error("graph is not immersed: vertex {vertex} has two side-{side} edges labeled a{label}")]
    NotImmersed { vertex: usize, side: u8, label: u32 },

    #[error("graph does not equal its core: vertex {0} has degree at most 1")]
    NotCore(usize),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("graph is not connected")]
    NotConnected,

    #[error("subgroup is trivial or cyclic (reduced rank 0); the coefficient is undefined for it")]
    RankZero,

    #[error("tuple is not admissible: {0}")]
    NotAdmissible(String),

    #[error("second graph lacks full pullback coverage: {0}")]
    NotCovered(String),

    #[error("degenerate multiset: every inequality has k = 2, so the scale constant is 0")]
    DegenerateMultiset,

    #[error("unbalanced multiset: variable x{letter}.{edges:?} has {neg} negative vs {pos} positive slots")]
    UnbalancedMultiset {
        letter: u32,
        edges: Vec<usize>,
        neg: usize,
        pos: usize,
    },

    #[error("zero vector has no multiset")]
    ZeroVector,

    #[error("max-vertices bound must be at least 2, got {0}")]
    BoundTooSmall(usize),

    #[error("invalid graph file: {0}")]
    InvalidGraph(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: user errors exit 1,
    /// internal-consistency failures exit 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 2,
            _ => 1,
        }
    }
}
