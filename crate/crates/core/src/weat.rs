//! Association statistics between target (name) sets and attribute (word) sets.
//!
//! All inputs are unit vectors, so `S̄·T̄` is the mean pairwise cosine between
//! the members of `S` and `T`. Sums run in index order.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::embedding::UnitEmbedding;
use crate::{Result, UbeError};

/// A nonempty set of unit vectors together with its mean `S̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSetView {
    members: Array2<f64>,
    mean: Array1<f64>,
}

impl TokenSetView {
    pub fn new(members: Array2<f64>) -> Result<Self> {
        let mean = mean_of_rows(members.view())?;
        Ok(TokenSetView { members, mean })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if flat.len() != rows.len() * dim {
            return Err(UbeError::config("set members differ in dimension"));
        }
        let members = Array2::from_shape_vec((rows.len(), dim), flat)
            .map_err(|e| UbeError::config(e.to_string()))?;
        Self::new(members)
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], emb: &UnitEmbedding) -> Result<Self> {
        let ranks = tokens
            .iter()
            .map(|t| emb.require(t.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(emb.matrix(&ranks))
    }

    pub fn members(&self) -> ArrayView2<'_, f64> {
        self.members.view()
    }

    pub fn mean(&self) -> ArrayView1<'_, f64> {
        self.mean.view()
    }

    pub fn len(&self) -> usize {
        self.members.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ_{v∈S} v̄`.
    fn sum(&self) -> Array1<f64> {
        let mut acc = Array1::zeros(self.members.ncols());
        for row in self.members.rows() {
            acc += &row;
        }
        acc
    }

    /// Union of two sets (members of `self` first).
    pub fn union(&self, other: &TokenSetView) -> Result<TokenSetView> {
        let members = ndarray::concatenate(ndarray::Axis(0), &[self.members.view(), other.members.view()])
            .map_err(|e| UbeError::config(e.to_string()))?;
        TokenSetView::new(members)
    }
}

/// Arithmetic mean of the rows, accumulated in row order.
pub fn mean_of_rows(rows: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if rows.nrows() == 0 {
        return Err(UbeError::config("token set is empty"));
    }
    let mut acc = Array1::zeros(rows.ncols());
    for row in rows.rows() {
        acc += &row;
    }
    acc /= rows.nrows() as f64;
    Ok(acc)
}

/// `S̄` for a set of vocabulary tokens.
pub fn set_mean<S: AsRef<str>>(tokens: &[S], emb: &UnitEmbedding) -> Result<Array1<f64>> {
    if tokens.is_empty() {
        return Err(UbeError::config("token set is empty"));
    }
    Ok(TokenSetView::from_tokens(tokens, emb)?.mean)
}

/// The two-group WEAT statistic `(Σ_{X1} x̄ − Σ_{X2} x̄)·(Ā1 − Ā2)`.
pub fn weat_s(x1: &TokenSetView, a1: &TokenSetView, x2: &TokenSetView, a2: &TokenSetView) -> f64 {
    let names = x1.sum() - x2.sum();
    let words = &a1.mean - &a2.mean;
    names.dot(&words)
}

/// Reference point for group deviations: the mean of the group means for
/// `n ≥ 2`, the all-names mean for a single group. Using the `n ≥ 2` rule with
/// one group would make every deviation, and hence `g`, identically zero.
pub fn group_mu(group_means: &[ArrayView1<'_, f64>], all_names_mean: ArrayView1<'_, f64>) -> Array1<f64> {
    match group_means {
        [] | [_] => all_names_mean.to_owned(),
        many => {
            let mut acc = Array1::zeros(all_names_mean.len());
            for m in many {
                acc += m;
            }
            acc / many.len() as f64
        }
    }
}

/// The name groups under test plus the quantities derived from them.
#[derive(Debug, Clone)]
pub struct GroupSystem {
    pub groups: Vec<TokenSetView>,
    pub all_names_mean: Array1<f64>,
    pub mu: Array1<f64>,
}

impl GroupSystem {
    pub fn new(groups: Vec<TokenSetView>, all_names_mean: Array1<f64>) -> Result<Self> {
        if groups.is_empty() {
            return Err(UbeError::config("at least one name group is required"));
        }
        let means: Vec<_> = groups.iter().map(TokenSetView::mean).collect();
        let mu = group_mu(&means, all_names_mean.view());
        Ok(GroupSystem {
            groups,
            all_names_mean,
            mu,
        })
    }

    pub fn n(&self) -> usize {
        self.groups.len()
    }
}

/// Pair score `σ = (X̄_i − μ)·(Ā_ij − 𝒜̄)`.
pub fn association_score(
    group_mean: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    attribute_mean: ArrayView1<'_, f64>,
    pool_mean: ArrayView1<'_, f64>,
) -> f64 {
    group_mean
        .iter()
        .zip(mu)
        .zip(attribute_mean.iter().zip(pool_mean))
        .map(|((x, m), (a, p))| (x - m) * (a - p))
        .sum()
}

/// The generalized multi-group WEAT `g = Σ_i (X̄_i − μ)·(Ā_i − 𝒜̄)`.
///
/// `all_names` supplies `𝒳̄` (only used when there is a single group) and
/// `pool` supplies `𝒜̄`.
pub fn weat_g(
    groups: &[(&TokenSetView, &TokenSetView)],
    all_names: &TokenSetView,
    pool: &TokenSetView,
) -> Result<f64> {
    if groups.is_empty() {
        return Err(UbeError::config("weat_g needs at least one group"));
    }
    let means: Vec<_> = groups.iter().map(|(x, _)| x.mean()).collect();
    let mu = group_mu(&means, all_names.mean());
    Ok(groups
        .iter()
        .map(|(x, a)| association_score(x.mean(), mu.view(), a.mean(), pool.mean()))
        .sum())
}
