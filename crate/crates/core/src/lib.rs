//! Grid permutation search with a trainable statistical cascade.
//!
//! An R×C grid of symbols is permuted by row interchange, per-row reversal
//! and a coprime skip read, recursively to a configurable depth. Every output
//! sequence is scored by four filters in order (n-gram QPT score, quads in
//! common with the source, dictionary word coverage, word-path tiling) and the
//! survivors are written out as hits.

pub mod cli;
pub mod engine;
pub mod error;
pub mod hexfloat;
pub mod lexicon;
pub mod ngram;
pub mod pathfinder;
pub mod permuter;
pub mod regressor;
pub mod textcore;

pub use error::{Error, Result};
