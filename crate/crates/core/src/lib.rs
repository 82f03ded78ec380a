//! Decomposable stratified graphical models for binary data: structure
//! representation, closed-form marginal likelihood, and Metropolis–Hastings
//! structure search.

pub mod data;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod nodeset;
pub mod oracle;
pub mod scoring;
pub mod search;
pub mod stratified;
mod unionfind;

pub use data::{counts, load_csv, read_csv, BinaryDataMatrix, GeneratorSpec};
pub use error::{Error, Result};
pub use graph::{CliqueDecomposition, EdgeSet, UndirectedGraph};
pub use io::ModelDocument;
pub use nodeset::{Edge, NodeSet};
pub use scoring::{log_unnormalized_posterior, score_report, CountTable, LogScore, ScoreReport};
pub use search::{learn, LearnConfig, LearnOutcome, RankedModel};
pub use stratified::{CsiStatement, LabelSet, StratifiedGraph, StratumElement, Violation};
