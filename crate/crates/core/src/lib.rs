//! Text classification and topic modeling for labeled social-media corpora.
//!
//! The pipeline runs in stages:
//!
//! * [`corpus`] parses tweet CSVs and plain-text ad records into typed records
//!   and groups them into a [`corpus::Corpus`].
//! * [`textprep`] tokenizes, stems and vectorizes documents into sparse
//!   document-term matrices.
//! * [`lda`] fits topic models by collapsed Gibbs sampling.
//! * [`svm`] and [`forest`] train one-vs-rest SVMs and random forests over
//!   sparse document vectors.
//! * [`eval`] handles stratified splits, truth tables and account-level
//!   verdicts.

pub mod corpus;
pub mod eval;
pub mod forest;
pub mod lda;
pub mod rng;
pub mod sparse;
pub mod svm;
pub mod textprep;

pub use corpus::{AccountCategory, Corpus, Document, Source};
pub use sparse::SparseVector;
