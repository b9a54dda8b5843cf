use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} edges, found {found}")]
    WrongEdgeCount { expected: usize, found: usize },
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("vertex {vertex} has degree {degree}, expected {expected}")]
    BadDegree {
        vertex: usize,
        degree: usize,
        expected: usize,
    },
    #[error("bad labels: {0}")]
    BadLabels(String),
    #[error("vertex {0} is not in the tree")]
    InvalidVertex(usize),
    #[error("component of a vertex relative to itself")]
    SameVertex,
    #[error("{what} = {value} exceeds the cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },
    #[error("shape has a leaf with several labels")]
    NotACladogram,
    #[error("too small: {0}")]
    TooSmall(String),
    #[error("bad edge: {0}")]
    BadEdge(String),
    #[error("vertex {0} is not a leaf")]
    BadLeaf(usize),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rate matrix is not symmetric")]
    NotSymmetric,
    #[error("bad edge-mass profile: {0}")]
    BadProfile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
