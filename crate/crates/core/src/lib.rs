//! Validation of embedded order dependencies (eODs) over tables with
//! missing values.
//!
//! An eOD `E: X ↦ Y` only has to hold on the tuples with no missing value
//! on the embedding `E`. [`validate_eod`] checks a statement and, when it
//! fails, searches for a larger embedding under which it holds. The
//! [`oracle`] module holds exhaustive references for testing and [`bench`]
//! the sweep harness.

pub mod bench;
pub mod cli;
pub mod embedding;
pub mod oracle;
pub mod order;
pub mod relation;

use thiserror::Error;

pub use embedding::{validate_eod, Statement, ValidationOutcome, Verdict};
pub use order::{AttributeList, Operator, ViolationKind, ViolationPair, Violations};
pub use relation::{load_relation, Embedding, LoadOptions, Relation, Value};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Relation(#[from] relation::RelationError),
    #[error(transparent)]
    Statement(#[from] embedding::StatementError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
