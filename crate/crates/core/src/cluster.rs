//! K-means++ over unit vectors.
//!
//! Distances are squared Euclidean, which on unit vectors is `2 − 2cos`.
//! Inputs are put into a canonical (lexicographic) order before seeding, so
//! the resulting partition does not depend on the order rows are supplied in.

use std::cmp::Ordering;
use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::rng::{self, Domain};
use crate::{Result, UbeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub n_init: usize,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            seed,
            max_iter: 300,
            n_init: 10,
        }
    }
}

/// A partition of the input rows into `k` nonempty clusters.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub k: usize,
    /// Cluster id (0-based) for each input row, in input order.
    pub assignment: Vec<usize>,
    /// Mean of each cluster's member rows.
    pub centers: Array2<f64>,
    /// Sum of squared distances from rows to their centers.
    pub inertia: f64,
    /// Inertia after every Lloyd update of the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

impl Clustering {
    /// Input row indices belonging to cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a == c).then_some(i))
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

pub fn kmeanspp(vectors: ArrayView2<'_, f64>, params: KMeansParams) -> Result<Clustering> {
    let KMeansParams {
        k,
        seed,
        max_iter,
        n_init,
    } = params;
    let n = vectors.nrows();
    if k == 0 {
        return Err(UbeError::config("k must be at least 1"));
    }
    if k > n {
        return Err(UbeError::config(format!("k = {k} exceeds the number of vectors ({n})")));
    }
    if max_iter == 0 || n_init == 0 {
        return Err(UbeError::config("max_iter and n_init must be at least 1"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lexicographic(vectors.row(a).as_slice(), vectors.row(b).as_slice(), a, b));
    let data = vectors.select(Axis(0), &order);

    let runs: Vec<Run> = (0..n_init)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, Domain::KMeansRestart, r as u64);
            lloyd(data.view(), k, max_iter, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.inertia.total_cmp(&b.inertia).then(ia.cmp(ib)))
        .map(|(_, run)| run)
        .expect("n_init >= 1");

    let mut assignment = vec![0; n];
    for (sorted_pos, &original) in order.iter().enumerate() {
        assignment[original] = best.assignment[sorted_pos];
    }
    Ok(Clustering {
        k,
        assignment,
        centers: best.centers,
        inertia: best.inertia,
        iterations: best.trace.len(),
        trace: best.trace,
    })
}

fn lexicographic(a: Option<&[f64]>, b: Option<&[f64]>, ia: usize, ib: usize) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a
            .iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then(ia.cmp(&ib)),
        _ => ia.cmp(&ib),
    }
}

struct Run {
    assignment: Vec<usize>,
    centers: Array2<f64>,
    inertia: f64,
    trace: Vec<f64>,
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// D² seeding: each new center is drawn with probability proportional to the
/// squared distance to the nearest center chosen so far.
fn seed_centers(data: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut nearest: Vec<f64> = data.rows().into_iter().map(|x| sq_dist(x, data.row(first))).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` just short of `target`
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (d, x) in nearest.iter_mut().zip(data.rows()) {
            *d = d.min(sq_dist(x, data.row(next)));
        }
    }
    data.select(Axis(0), &chosen)
}

/// Nearest center per row (lowest id on ties) and the squared distance to it.
fn assign(data: ArrayView2<'_, f64>, centers: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let cross = data.dot(&centers.t());
    let row_norms: Vec<f64> = data.rows().into_iter().map(|r| r.dot(&r)).collect();
    let center_norms: Vec<f64> = centers.rows().into_iter().map(|c| c.dot(&c)).collect();
    let mut labels = Vec::with_capacity(data.nrows());
    let mut dists = Vec::with_capacity(data.nrows());
    for (i, row) in cross.rows().into_iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, &g) in row.iter().enumerate() {
            let d = row_norms[i] - 2.0 * g + center_norms[c];
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        labels.push(best);
        dists.push(best_d.max(0.0));
    }
    (labels, dists)
}

/// Give every empty cluster the row that is currently farthest from its center.
fn repair_empty(labels: &mut [usize], dists: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
            .expect("k <= n guarantees a donor cluster");
        sizes[labels[far]] -= 1;
        labels[far] = c;
        sizes[c] = 1;
        dists[far] = 0.0;
    }
}

fn update_centers(data: ArrayView2<'_, f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut centers = Array2::zeros((k, data.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &l) in data.rows().into_iter().zip(labels) {
        let mut c = centers.row_mut(l);
        c += &row;
        counts[l] += 1;
    }
    for (mut c, &count) in centers.rows_mut().into_iter().zip(&counts) {
        c /= count as f64;
    }
    centers
}

fn inertia(data: ArrayView2<'_, f64>, labels: &[usize], centers: &Array2<f64>) -> f64 {
    data.rows()
        .into_iter()
        .zip(labels)
        .map(|(x, &l)| sq_dist(x, centers.row(l)))
        .sum()
}

fn lloyd(data: ArrayView2<'_, f64>, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> Run {
    let seeds = seed_centers(data, k, rng);
    let (mut labels, mut dists) = assign(data, &seeds);
    let mut trace = Vec::new();
    let mut centers;
    let mut current;
    let mut iter = 0;
    loop {
        iter += 1;
        repair_empty(&mut labels, &mut dists, k);
        centers = update_centers(data, &labels, k);
        current = inertia(data, &labels, &centers);
        trace.push(current);
        if iter >= max_iter {
            break;
        }
        let (next, next_dists) = assign(data, &centers);
        if next == labels {
            break;
        }
        labels = next;
        dists = next_dists;
    }
    Run {
        assignment: labels,
        centers,
        inertia: current,
        trace,
    }
}

/// Write `token,cluster_id` rows with 1-based cluster ids.
pub fn write_assignments_csv<W: Write>(
    tokens: &[String],
    clustering: &Clustering,
    writer: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["token", "cluster_id"]).map_err(csv_err)?;
    for (token, &c) in tokens.iter().zip(&clustering.assignment) {
        out.write_record([token.as_str(), &(c + 1).to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> UbeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => UbeError::Io(io),
        other => UbeError::Ingest(format!("{other:?}")),
    }
}

/// Mean of the rows listed in `members`, in the given order.
pub(crate) fn mean_of(data: ArrayView2<'_, f64>, members: &[usize]) -> Array1<f64> {
    let mut acc = Array1::zeros(data.ncols());
    for &i in members {
        acc += &data.row(i);
    }
    acc / members.len() as f64
}
