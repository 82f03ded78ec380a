use thiserror::Error;

use crate::nodeset::{Edge, NodeSet};
use crate::stratified::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not decomposable (chordal)")]
    NotDecomposable,
    #[error("stratified graph is not decomposable: {}", format_violations(.0))]
    NotDecomposableSg(Vec<Violation>),
    #[error("node sets must be pairwise disjoint")]
    OverlappingSets,
    #[error("edge {0} is not in the graph")]
    MissingEdge(Edge),
    #[error("node {} cannot be the final variable of clique {clique}", .node + 1)]
    InvalidFinalVariable { clique: NodeSet, node: usize },
    #[error("invalid strata for clique {clique}: {reason}")]
    InvalidStrata { clique: NodeSet, reason: String },
    #[error("expected {expected} hyperparameters, got {got}")]
    AlphaMismatch { expected: usize, got: usize },
    #[error("hyperparameters must be positive (got {0})")]
    NonPositiveAlpha(f64),
    #[error("data matrix has no rows")]
    EmptyData,
    #[error("unknown column index {0}")]
    UnknownColumn(usize),
    #[error("at most {max} variables are supported, got {got}")]
    TooManyVariables { max: usize, got: usize },
    #[error("CSV parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },
    #[error("non-binary value {value:?} at row {row}, column {col}")]
    NonBinaryValue {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid model document: {0}")]
    InvalidModel(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("exhaustive enumeration is limited to {max} variables, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
