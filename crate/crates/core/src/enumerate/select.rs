//! Voronoi partitioning of categories and per-group word selection.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::weat::association_score;

/// Split the rows of `words` by their most similar center (inner product of
/// unit vectors; ties go to the lowest center index). Returns row indices
/// per center, ascending.
pub fn voronoi_partition(words: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>) -> Vec<Vec<usize>> {
    let mut cells = vec![Vec::new(); centers.nrows()];
    for (w, word) in words.rows().into_iter().enumerate() {
        let mut best = 0;
        let mut best_sim = f64::NEG_INFINITY;
        for (i, c) in centers.rows().into_iter().enumerate() {
            let sim = word.dot(&c);
            if sim > best_sim {
                best = i;
                best_sim = sim;
            }
        }
        cells[best].push(w);
    }
    cells
}

/// Outcome of choosing `t` words for one (group, category) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen candidates, best first. All of them when the pair is incomplete.
    pub chosen: Vec<usize>,
    /// False when fewer than `t` candidates were available.
    pub complete: bool,
}

/// Pick the `t` candidates maximizing `(X̄_i − μ)·(w̄ − Ā_j)`; ties go to the
/// candidate listed first (lower frequency rank).
///
/// `candidates` are `(id, vector)` pairs in rank order.
pub fn select_words<'a, I>(
    candidates: I,
    group_mean: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    category_mean: ArrayView1<'_, f64>,
    t: usize,
) -> Selection
where
    I: IntoIterator<Item = (usize, ArrayView1<'a, f64>)>,
{
    let deviation = &group_mean - &mu;
    let mut top = TopK::new(t);
    let mut seen = 0;
    for (id, w) in candidates {
        seen += 1;
        let score: f64 = deviation
            .iter()
            .zip(w.iter().zip(category_mean))
            .map(|(d, (x, a))| d * (x - a))
            .sum();
        top.offer(score, id);
    }
    Selection {
        chosen: top.into_ids(),
        complete: seen >= t,
    }
}

/// Bounded best-first list; equal scores keep the earlier entry.
#[derive(Debug, Clone)]
pub(crate) struct TopK {
    cap: usize,
    items: Vec<(f64, usize)>,
}

impl TopK {
    pub(crate) fn new(cap: usize) -> Self {
        TopK {
            cap,
            items: Vec::with_capacity(cap + 1),
        }
    }

    pub(crate) fn offer(&mut self, score: f64, id: usize) {
        if self.items.len() == self.cap {
            match self.items.last() {
                Some(&(worst, _)) if score > worst => {
                    self.items.pop();
                }
                _ => return,
            }
        }
        let pos = self.items.partition_point(|&(s, _)| s >= score);
        self.items.insert(pos, (score, id));
    }

    pub(crate) fn into_ids(self) -> Vec<usize> {
        self.items.into_iter().map(|(_, id)| id).collect()
    }
}

/// Word categories over the pool.
#[derive(Debug, Clone)]
pub struct Categories {
    /// Category of every pool word.
    pub labels: Vec<usize>,
    /// Pool indices per category, ascending.
    pub members: Vec<Vec<usize>>,
    /// `Ā_j`: mean unit vector per category, one row each.
    pub means: Array2<f64>,
}

impl Categories {
    pub fn new(pool: ArrayView2<'_, f64>, labels: Vec<usize>, m: usize) -> Self {
        let mut members = vec![Vec::new(); m];
        for (w, &j) in labels.iter().enumerate() {
            members[j].push(w);
        }
        let mut means = Array2::zeros((m, pool.ncols()));
        for (j, ids) in members.iter().enumerate() {
            if !ids.is_empty() {
                means.row_mut(j).assign(&crate::cluster::mean_of(pool, ids));
            }
        }
        Categories {
            labels,
            members,
            means,
        }
    }

    pub fn m(&self) -> usize {
        self.members.len()
    }
}

/// Scores (and optionally selections) for every pair under one placement
/// of the group centers. Indexed `[j * n + i]`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub n: usize,
    pub sigma: Vec<f64>,
    pub selections: Option<Vec<Selection>>,
    pub attribute_means: Option<Vec<Option<Array1<f64>>>>,
}

/// Run word selection and scoring for all categories at once.
///
/// One matrix product gives every pool word's similarity to each center and
/// to `μ`. The selection objective expands as
/// `w̄·(X̄_i − μ) − Ā_j·(X̄_i − μ)`. Incomplete pairs score `−∞`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    pool: ArrayView2<'_, f64>,
    pool_mean: ArrayView1<'_, f64>,
    categories: &Categories,
    centers: ArrayView2<'_, f64>,
    mu: ArrayView1<'_, f64>,
    t: usize,
    allow_multiplicities: bool,
    keep_selections: bool,
) -> Evaluation {
    let n = centers.nrows();
    let m = categories.m();
    let probes = concatenate(Axis(0), &[centers, mu.insert_axis(Axis(0))]).expect("same dim");
    let sims = pool.dot(&probes.t());
    let offsets = categories.means.dot(&probes.t());

    let mut tops: Vec<TopK> = (0..n * m).map(|_| TopK::new(t)).collect();
    let mut counts = vec![0usize; n * m];
    for (w, row) in sims.rows().into_iter().enumerate() {
        let j = categories.labels[w];
        let to_mu = row[n];
        let mut consider = |i: usize| {
            let score = (row[i] - to_mu) - (offsets[[j, i]] - offsets[[j, n]]);
            tops[j * n + i].offer(score, w);
            counts[j * n + i] += 1;
        };
        if allow_multiplicities {
            (0..n).for_each(&mut consider);
        } else {
            let mut best = 0;
            for i in 1..n {
                if row[i] > row[best] {
                    best = i;
                }
            }
            consider(best);
        }
    }

    let mut sigma = Vec::with_capacity(n * m);
    let mut selections = keep_selections.then(|| Vec::with_capacity(n * m));
    let mut means = keep_selections.then(|| Vec::with_capacity(n * m));
    for (cell, top) in tops.into_iter().enumerate() {
        let i = cell % n;
        let chosen = top.into_ids();
        let complete = counts[cell] >= t;
        let mean = complete.then(|| crate::cluster::mean_of(pool, &chosen));
        sigma.push(match &mean {
            Some(a) => association_score(centers.row(i), mu, a.view(), pool_mean),
            None => f64::NEG_INFINITY,
        });
        if let Some(s) = selections.as_mut() {
            s.push(Selection { chosen, complete });
        }
        if let Some(ms) = means.as_mut() {
            ms.push(mean);
        }
    }
    Evaluation {
        n,
        sigma,
        selections,
        attribute_means: means,
    }
}
