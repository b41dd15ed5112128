//! Training-free text classification with compressors.
//!
//! A query is first scored against per-class lists of dictionary
//! compressors; the two classes it compresses best under are then settled
//! by normalized-compression-distance nearest neighbours over the training
//! texts of just those two classes.

pub mod bundle;
pub mod classifier;
pub mod cli;
pub mod compression;
pub mod corpus;
pub mod cr;
pub mod datasets;
pub mod error;
pub mod mcc;
pub mod report;
pub mod synthetic;

pub use classifier::{evaluate, Classifier, Evaluation, PipelineConfig, Prediction, Variant};
pub use corpus::{Corpus, LabeledText};
pub use error::{Error, Result};
