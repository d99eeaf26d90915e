//! Embedding evaluation: clustering-based intrinsic scores and the
//! downstream news-classifier benchmark.

pub mod extrinsic;
pub mod intrinsic;
