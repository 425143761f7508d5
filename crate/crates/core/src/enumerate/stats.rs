//! Monte Carlo p-values and Benjamini–Hochberg control.

use crate::{Result, UbeError};

/// `(#{r : null_r ≥ observed} + 1) / (R + 1)`.
pub fn monte_carlo_pvalue(observed: f64, nulls: &[f64]) -> f64 {
    let exceed = nulls.iter().filter(|&&s| s >= observed).count();
    (exceed + 1) as f64 / (nulls.len() + 1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct BhOutcome {
    /// Largest p-value that is rejected; 0 when nothing is.
    pub critical_p: f64,
    pub reject: Vec<bool>,
}

impl BhOutcome {
    pub fn rejections(&self) -> usize {
        self.reject.iter().filter(|&&r| r).count()
    }
}

/// Step-up procedure: with `p_(1) ≤ … ≤ p_(N)`, find the largest `k` such that
/// `p_(k) ≤ k·α/N` and reject every hypothesis with `p ≤ p_(k)`.
pub fn benjamini_hochberg(pvalues: &[f64], alpha: f64) -> Result<BhOutcome> {
    if pvalues.is_empty() {
        return Err(UbeError::config("Benjamini-Hochberg needs at least one p-value"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(UbeError::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if let Some(bad) = pvalues.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(UbeError::config(format!("p-value {bad} outside (0, 1]")));
    }
    let total = pvalues.len() as f64;
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let critical_p = sorted
        .iter()
        .enumerate()
        .filter(|&(k, &p)| p <= (k + 1) as f64 * alpha / total)
        .map(|(_, &p)| p)
        .last()
        .unwrap_or(0.0);
    let reject = pvalues
        .iter()
        .map(|&p| critical_p > 0.0 && p <= critical_p)
        .collect();
    Ok(BhOutcome { critical_p, reject })
}
