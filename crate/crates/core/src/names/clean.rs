//! Removing names whose vectors mostly reflect another sense of the word.

use std::collections::HashSet;

use ndarray::{Array1, Axis};
use rand::seq::index;
use rand::Rng;

use super::svm::{LinearSvm, SvmParams};
use super::NameTable;
use crate::embedding::UnitEmbedding;
use crate::rng::{self, Domain};
use crate::{Result, UbeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleanMethod {
    /// Names vs. sampled frequent non-names; drop the smallest margins.
    Margin,
    /// Drop names least similar on average to the other names.
    MeanSimilarity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleaningParams {
    pub removal_fraction: f64,
    pub method: CleanMethod,
    /// Negatives are drawn from this many most frequent tokens.
    pub negatives_pool: usize,
    pub seed: u64,
    pub svm: SvmParams,
}

impl Default for CleaningParams {
    fn default() -> Self {
        CleaningParams {
            removal_fraction: 0.2,
            method: CleanMethod::Margin,
            negatives_pool: 50_000,
            seed: 0,
            svm: SvmParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cleaning {
    pub kept: NameTable,
    /// Removed names, least name-like first.
    pub removed: Vec<String>,
    /// Names dropped before cleaning because the embedding lacks them.
    pub missing: Vec<String>,
}

/// Drop names absent from `emb`, then remove `⌈removal_fraction·N⌉` of the
/// remaining `N` names with the lowest name-likeness score.
pub fn clean_names(table: &NameTable, emb: &UnitEmbedding, params: CleaningParams) -> Result<Cleaning> {
    let f = params.removal_fraction;
    if !(0.0..1.0).contains(&f) {
        return Err(UbeError::config(format!("removal fraction must lie in [0, 1), got {f}")));
    }
    let (present, missing) = table.in_vocabulary(emb);
    let n = present.len();
    // guard against 0.07·100 = 7.000000000000001
    let remove = ((f * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if remove == 0 {
        return Ok(Cleaning {
            kept: present,
            removed: Vec::new(),
            missing,
        });
    }

    let ranks: Vec<usize> = present.names().map(|nm| emb.rank(nm).expect("present")).collect();
    let vectors = emb.matrix(&ranks);
    let scores: Vec<f64> = match params.method {
        CleanMethod::MeanSimilarity => {
            let total: Array1<f64> = vectors.sum_axis(Axis(0));
            vectors
                .rows()
                .into_iter()
                .map(|x| {
                    if n < 2 {
                        0.0
                    } else {
                        (total.dot(&x) - x.dot(&x)) / (n - 1) as f64
                    }
                })
                .collect()
        }
        CleanMethod::Margin => {
            let mut rng = rng::stream(params.seed, Domain::Cleaning, 0);
            let names: HashSet<&str> = table.names().collect();
            let candidates: Vec<usize> = (0..params.negatives_pool.min(emb.len()))
                .filter(|&r| !names.contains(emb.token(r)))
                .collect();
            if candidates.is_empty() {
                return Err(UbeError::config("no non-name tokens available as negatives"));
            }
            let negatives: Vec<usize> = if candidates.len() >= n {
                index::sample(&mut rng, candidates.len(), n)
                    .into_iter()
                    .map(|k| candidates[k])
                    .collect()
            } else {
                tracing::warn!(
                    target: "ube::names",
                    needed = n,
                    available = candidates.len(),
                    "sampling negatives with replacement"
                );
                (0..n).map(|_| candidates[rng.random_range(0..candidates.len())]).collect()
            };
            let x = ndarray::concatenate(Axis(0), &[vectors.view(), emb.matrix(&negatives).view()])
                .expect("same dimension");
            let y: Vec<f64> = (0..2 * n).map(|k| if k < n { 1.0 } else { -1.0 }).collect();
            let svm = LinearSvm::fit(x.view(), &y, params.svm, &mut rng)?;
            vectors.rows().into_iter().map(|row| svm.decision(row)).collect()
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(ranks[b].cmp(&ranks[a])));
    let removed_idx: HashSet<usize> = order[..remove].iter().copied().collect();
    let removed: Vec<String> = order[..remove]
        .iter()
        .map(|&i| present.records()[i].name.clone())
        .collect();
    let mut k = 0;
    let kept = present.filtered(|_| {
        let keep = !removed_idx.contains(&k);
        k += 1;
        keep
    });
    tracing::info!(target: "ube::names", kept = kept.len(), removed = removed.len(), "cleaned names");
    Ok(Cleaning {
        kept,
        removed,
        missing,
    })
}
