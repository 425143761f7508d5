//! Word-embedding loading, normalization and the attribute word pool.

mod pool;
mod text;
mod word2vec;

use std::collections::{HashMap, HashSet};

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::{Result, UbeError};

pub use pool::{frequent_lowercase_words, passes_character_rule, WordPool};
pub use text::{load_text_vectors, read_text_vectors, write_text_vectors, TextHeader};
pub use word2vec::{load_word2vec_binary, read_word2vec_binary, write_word2vec_binary};

/// Counters collected while reading an embedding file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub records: usize,
    pub dropped_zero: usize,
    pub dropped_duplicate: usize,
}

/// Token/vector pairs as read from disk, in file order.
///
/// File order is taken to be frequency order. Zero vectors and repeated
/// tokens never make it in; they are counted in [`LoadStats`].
#[derive(Debug, Clone)]
pub struct RawEmbedding {
    dim: usize,
    tokens: Vec<String>,
    data: Vec<f32>,
    seen: HashSet<String>,
    stats: LoadStats,
}

impl RawEmbedding {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(UbeError::format(None, "embedding dimension must be positive"));
        }
        Ok(RawEmbedding {
            dim,
            tokens: Vec::new(),
            data: Vec::new(),
            seen: HashSet::new(),
            stats: LoadStats::default(),
        })
    }

    /// Build from in-memory rows; rows of the wrong length are a format error.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut raw = RawEmbedding::new(dim)?;
        for (k, (token, vector)) in rows.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(UbeError::format(
                    k + 1,
                    format!("expected {dim} components, found {}", vector.len()),
                ));
            }
            raw.push(token.into(), &vector);
        }
        Ok(raw)
    }

    /// Append a record. Returns false if it was dropped (zero or duplicate).
    pub(crate) fn push(&mut self, token: String, vector: &[f32]) -> bool {
        debug_assert_eq!(vector.len(), self.dim);
        self.stats.records += 1;
        if vector.iter().all(|&x| x == 0.0) {
            self.stats.dropped_zero += 1;
            return false;
        }
        if !self.seen.insert(token.clone()) {
            self.stats.dropped_duplicate += 1;
            return false;
        }
        self.tokens.push(token);
        self.data.extend_from_slice(vector);
        true
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vector(&self, index: usize) -> &[f32] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.tokens
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub(crate) fn log_stats(&self, source: &str) {
        tracing::info!(
            target: "ube::embedding",
            source,
            dim = self.dim,
            kept = self.len(),
            records = self.stats.records,
            dropped_zero = self.stats.dropped_zero,
            dropped_duplicate = self.stats.dropped_duplicate,
            "loaded embedding"
        );
        if self.stats.dropped_zero > 0 {
            tracing::warn!(target: "ube::embedding", count = self.stats.dropped_zero, "dropped zero vectors");
        }
        if self.stats.dropped_duplicate > 0 {
            tracing::warn!(target: "ube::embedding", count = self.stats.dropped_duplicate, "dropped duplicate tokens");
        }
    }
}

/// Embedding with every vector scaled to unit length.
///
/// Rows are stored as `f32` to keep multi-million-token vocabularies in
/// memory. [`UnitEmbedding::vector`] widens a row to `f64` and renormalizes
/// it, and every statistic in the crate is computed on those `f64` vectors.
#[derive(Debug, Clone)]
pub struct UnitEmbedding {
    dim: usize,
    tokens: Vec<String>,
    data: Vec<f32>,
    rank: HashMap<String, usize>,
}

/// Scale every row to unit Euclidean norm. Order and ranks are preserved.
pub fn normalize(raw: RawEmbedding) -> UnitEmbedding {
    let RawEmbedding {
        dim,
        tokens,
        mut data,
        ..
    } = raw;
    for row in data.chunks_exact_mut(dim) {
        let norm = row
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum::<f64>()
            .sqrt();
        for x in row.iter_mut() {
            *x = (f64::from(*x) / norm) as f32;
        }
    }
    let rank = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    UnitEmbedding {
        dim,
        tokens,
        data,
        rank,
    }
}

impl UnitEmbedding {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, rank: usize) -> &str {
        &self.tokens[rank]
    }

    /// 0-based frequency rank of `token`.
    pub fn rank(&self, token: &str) -> Option<usize> {
        self.rank.get(token).copied()
    }

    pub fn require(&self, token: &str) -> Result<usize> {
        self.rank(token)
            .ok_or_else(|| UbeError::UnknownToken(token.to_string()))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.rank.contains_key(token)
    }

    /// Stored (single precision) unit row.
    pub fn row(&self, rank: usize) -> &[f32] {
        &self.data[rank * self.dim..(rank + 1) * self.dim]
    }

    /// Unit vector of the token at `rank` in double precision.
    pub fn vector(&self, rank: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.row(rank).iter().map(|&x| f64::from(x)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }

    /// Stack the unit vectors of `ranks` into a matrix, one row each.
    pub fn matrix(&self, ranks: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((ranks.len(), self.dim));
        for (mut row, &r) in out.rows_mut().into_iter().zip(ranks) {
            for (dst, src) in row.iter_mut().zip(self.vector(r)) {
                *dst = src;
            }
        }
        out
    }

    /// SHA-256 over dimension, tokens and stored vector bits.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.dim as u64).to_le_bytes());
        for (token, row) in self.tokens.iter().zip(self.data.chunks_exact(self.dim)) {
            hasher.update(token.as_bytes());
            hasher.update([0u8]);
            for x in row {
                hasher.update(x.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}
