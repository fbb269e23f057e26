//! Scores the information quality of wiki articles from the edit history of
//! their authors and the authors' standing in collaboration networks.
//!
//! The pipeline runs in stages over plain TSV intermediates:
//!
//! 1. [`ingest`] streams a MediaWiki XML dump into per-page histories.
//! 2. [`longevity`] measures how much of each edit survives later
//!    revisions (using the move-aware distance in [`diff`]) and sums it per
//!    author, then picks each page's main contributors.
//! 3. [`network`] builds co-author and talk networks over authors, and
//!    [`centrality`] scores authors on them.
//! 4. [`quality`] turns contributions and centralities into page scores,
//!    which [`eval`] compares against editorial class labels.
//!
//! [`pipeline`] wires the stages together with atomic, hash-checked
//! artifacts and [`synth`] generates labelled corpora for testing.

pub mod centrality;
pub mod diff;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod longevity;
pub mod network;
pub mod pipeline;
pub mod quality;
pub mod synth;

pub use error::{Error, Result};
