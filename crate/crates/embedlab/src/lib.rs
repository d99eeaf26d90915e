//! Workbench for training two-layer word embeddings (skip-gram and CBOW),
//! sweeping dimension/window grids, and scoring each embedding with
//! clustering-based intrinsic metrics and a CNN news-classifier benchmark.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod nn;
pub mod preprocess;
pub mod report;
pub mod svg;
pub mod sweep;
pub mod synth;
pub mod vocab;
pub mod word2vec;

pub use error::{Error, Result};
