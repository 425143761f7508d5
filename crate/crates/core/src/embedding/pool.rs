use std::collections::HashSet;

use ndarray::{Array1, Array2, Axis};

use super::UnitEmbedding;
use crate::{Result, UbeError};

/// The attribute words: the `M` most frequent lower-case tokens.
#[derive(Debug, Clone)]
pub struct WordPool {
    /// Embedding ranks of the members, ascending.
    pub ranks: Vec<usize>,
    pub words: Vec<String>,
    /// Unit vectors, one row per word.
    pub vectors: Array2<f64>,
    /// Arithmetic mean of the member unit vectors.
    pub pool_mean: Array1<f64>,
}

impl WordPool {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// True if every byte is `a`-`z` or a space (after mapping `_` to space when
/// requested) and the token is not blank.
pub fn passes_character_rule(token: &str, underscore_as_space: bool) -> bool {
    let mut letters = 0usize;
    for b in token.bytes() {
        match b {
            b'a'..=b'z' => letters += 1,
            b' ' => {}
            b'_' if underscore_as_space => {}
            _ => return false,
        }
    }
    letters > 0
}

fn fold_key(token: &str, underscore_as_space: bool) -> String {
    let mapped = if underscore_as_space {
        token.replace('_', " ")
    } else {
        token.to_string()
    };
    mapped.to_lowercase()
}

/// Select up to `m` attribute words in rank order.
///
/// A token is kept when it consists only of lower-case ASCII letters and
/// spaces, and no token that case-folds to the same string appears earlier in
/// the vocabulary ("john" is dropped when "John" is more frequent).
pub fn frequent_lowercase_words(
    emb: &UnitEmbedding,
    m: usize,
    underscore_as_space: bool,
) -> Result<WordPool> {
    if m == 0 {
        return Err(UbeError::config("word pool size M must be at least 1"));
    }
    let mut seen = HashSet::new();
    let mut ranks = Vec::with_capacity(m.min(emb.len()));
    for (rank, token) in emb.tokens().iter().enumerate() {
        let fresh = seen.insert(fold_key(token, underscore_as_space));
        if fresh && passes_character_rule(token, underscore_as_space) {
            ranks.push(rank);
            if ranks.len() == m {
                break;
            }
        }
    }
    if ranks.is_empty() {
        return Err(UbeError::config("no token passes the lower-case word filter"));
    }
    if ranks.len() < m {
        tracing::warn!(
            target: "ube::embedding",
            requested = m,
            found = ranks.len(),
            "fewer lower-case words than requested"
        );
    }
    let words = ranks.iter().map(|&r| emb.token(r).to_string()).collect();
    let vectors = emb.matrix(&ranks);
    let pool_mean = vectors.mean_axis(Axis(0)).expect("pool is nonempty");
    Ok(WordPool {
        ranks,
        words,
        vectors,
        pool_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{normalize, RawEmbedding};

    fn emb(tokens: &[&str]) -> UnitEmbedding {
        let rows = tokens.iter().enumerate().map(|(i, t)| {
            let v = vec![(i as f32 + 1.0).cos(), (i as f32 + 1.0).sin(), 0.5];
            (t.to_string(), v)
        });
        normalize(RawEmbedding::from_rows(3, rows).unwrap())
    }

    #[test]
    fn lowercase_dropped_when_capitalized_is_more_frequent() {
        let mut tokens = Vec::new();
        let fillers: Vec<String> = (0..600)
            .map(|i| format!("w{}{}", (b'a' + (i / 26) as u8) as char, (b'a' + (i % 26) as u8) as char))
            .collect();
        tokens.extend(fillers.iter().map(String::as_str));
        tokens[10] = "John";
        tokens[500] = "john";
        let e = emb(&tokens);
        let pool = frequent_lowercase_words(&e, 1000, true).unwrap();
        assert!(!pool.words.iter().any(|w| w == "john"));
        assert_eq!(pool.len(), 598);
    }

    #[test]
    fn phrases_with_spaces_are_kept() {
        let e = emb(&["new york", "New_York"]);
        let pool = frequent_lowercase_words(&e, 5, true).unwrap();
        assert_eq!(pool.words, vec!["new york".to_string()]);
    }

    #[test]
    fn mixed_case_token_fails_character_rule() {
        let e = emb(&["abc", "aBc"]);
        let pool = frequent_lowercase_words(&e, 5, true).unwrap();
        assert_eq!(pool.words, vec!["abc".to_string()]);
    }

    #[test]
    fn underscore_switch() {
        let e = emb(&["foie_gras", "salt"]);
        assert_eq!(frequent_lowercase_words(&e, 5, true).unwrap().len(), 2);
        assert_eq!(frequent_lowercase_words(&e, 5, false).unwrap().words, vec!["salt".to_string()]);
    }

    #[test]
    fn multibyte_and_digits_disqualify() {
        assert!(!passes_character_rule("café", true));
        assert!(!passes_character_rule("abc1", true));
        assert!(!passes_character_rule(" ", true));
        assert!(passes_character_rule("a b", false));
    }

    #[test]
    fn stops_after_m_and_mean_matches() {
        let e = emb(&["a", "B", "c", "d", "e"]);
        let pool = frequent_lowercase_words(&e, 2, true).unwrap();
        assert_eq!(pool.words, vec!["a".to_string(), "c".to_string()]);
        let expect: Vec<f64> = (0..3).map(|k| (e.vector(0)[k] + e.vector(2)[k]) / 2.0).collect();
        for k in 0..3 {
            assert!((pool.pool_mean[k] - expect[k]).abs() < 1e-15);
        }
        assert!(pool.pool_mean.dot(&pool.pool_mean) <= 1.0);
    }

    #[test]
    fn zero_m_is_config_error() {
        let e = emb(&["a"]);
        assert!(matches!(frequent_lowercase_words(&e, 0, true), Err(UbeError::Config(_))));
    }
}
