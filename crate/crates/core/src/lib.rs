//! Unsupervised enumeration of word-embedding association tests.
//!
//! Given a word embedding and a list of target names, the pipeline clusters
//! the names into groups and the frequent lower-case words into categories,
//! picks for every (group, category) pair the words most aligned with the
//! group, and scores each pair against a null distribution obtained by
//! applying Haar-random rotations to the name side only. Benjamini–Hochberg
//! control over all pairs decides which associations are reported.
//!
//! Modules:
//!
//! * [`embedding`]: word2vec binary / text loaders, normalization, the
//!   frequent lower-case word pool.
//! * [`names`]: SSA and Census ingestion, name cleaning, demographics.
//! * [`cluster`]: K-means++ over unit vectors.
//! * [`weat`]: the association statistics `s`, `g` and the pair score.
//! * [`enumerate`]: Voronoi selection, rotational null, p-values, BH.
//! * [`proxy`]: potential indirect bias over significant fourtuples.
//! * [`report`]: illustrative names, rendering, Zipf data.

pub mod cluster;
pub mod embedding;
pub mod enumerate;
mod error;
pub mod names;
pub mod proxy;
pub mod report;
pub mod rng;
pub mod weat;

pub use error::{Result, UbeError};
