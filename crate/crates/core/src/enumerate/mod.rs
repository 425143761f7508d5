//! The enumeration pipeline: group the names, categorize the frequent words,
//! select `t` words per (group, category) pair, and test every pair against
//! scores obtained after randomly rotating the name side.
//!
//! Per rotation the work is `O(n·d²)` to rotate the group centers and `μ`,
//! plus one `M × d` by `d × (n+1)` product for selection, i.e.
//! `O(n·d² + M·n·d)` overall.

pub mod haar;
pub mod nulls;
pub mod select;
pub mod stats;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{kmeanspp, mean_of, Clustering, KMeansParams};
use crate::embedding::{frequent_lowercase_words, UnitEmbedding, WordPool};
use crate::names::{demographic_summary, CleanMethod, NameTable};
use crate::proxy::{self, IndirectBiasSummary};
use crate::report::{illustrative_names, AuditReport, GroupReport, PairResult, RunMetadata, Similarity, WeatTest};
use crate::rng::{self, Domain};
use crate::weat::group_mu;
use crate::{Result, UbeError};

pub use haar::{haar_rotation, HaarRotation};
pub use nulls::NullScores;
pub use select::{evaluate, select_words, voronoi_partition, Categories, Evaluation, Selection};
pub use stats::{benjamini_hochberg, monte_carlo_pvalue, BhOutcome};

/// Algorithm inputs. Serialized verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UbeConfig {
    /// Number of name groups.
    pub n: usize,
    /// Number of word categories.
    pub m: usize,
    /// Size of the frequent lower-case word pool.
    pub pool_size: usize,
    /// Words per group per test.
    pub t: usize,
    /// False discovery rate bound.
    pub alpha: f64,
    pub rotations: usize,
    pub seed: u64,
    pub allow_multiplicities: bool,
    pub underscore_as_space: bool,
    pub kmeans_max_iter: usize,
    pub kmeans_n_init: usize,
    pub illustrative_k: usize,
    pub illustrative_similarity: Similarity,
    /// Cleaning settings echoed from name preparation, if it ran.
    pub clean_method: Option<CleanMethod>,
    pub removal_fraction: Option<f64>,
}

impl Default for UbeConfig {
    fn default() -> Self {
        UbeConfig {
            n: 12,
            m: 64,
            pool_size: 30_000,
            t: 3,
            alpha: 0.05,
            rotations: 10_000,
            seed: 0,
            allow_multiplicities: false,
            underscore_as_space: true,
            kmeans_max_iter: 300,
            kmeans_n_init: 10,
            illustrative_k: 5,
            illustrative_similarity: Similarity::InnerProduct,
            clean_method: None,
            removal_fraction: None,
        }
    }
}

impl UbeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("m", self.m),
            ("pool_size", self.pool_size),
            ("t", self.t),
            ("rotations", self.rotations),
            ("kmeans_max_iter", self.kmeans_max_iter),
            ("kmeans_n_init", self.kmeans_n_init),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(UbeError::config(format!("{name} must be at least 1")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(UbeError::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.rotations as u64 >= 1 << 48 {
            return Err(UbeError::config("too many rotations"));
        }
        Ok(())
    }

    fn kmeans(&self, k: usize, domain: Domain) -> KMeansParams {
        KMeansParams {
            k,
            seed: rng::derive_seed(self.seed, domain, 0),
            max_iter: self.kmeans_max_iter,
            n_init: self.kmeans_n_init,
        }
    }
}

/// A rotation applied to the name-side vectors.
#[derive(Debug, Clone)]
pub enum Rotation {
    Identity,
    Haar(HaarRotation),
    /// An explicit orthogonal matrix; rows are mapped `x ↦ x·U`.
    Matrix(Array2<f64>),
}

impl Rotation {
    fn apply(&self, rows: &mut Array2<f64>) {
        match self {
            Rotation::Identity => {}
            Rotation::Haar(h) => h.rotate_rows_in_place(rows),
            Rotation::Matrix(u) => *rows = rows.dot(u),
        }
    }
}

/// Pipeline state after clustering and the observed selection.
#[derive(Debug)]
pub struct Enumerator {
    config: UbeConfig,
    fingerprint: Option<String>,
    dim: usize,
    vocabulary_size: usize,
    names: NameTable,
    name_ranks: Vec<usize>,
    name_clustering: Clustering,
    /// Member indices into `names` per group, ascending.
    groups: Vec<Vec<usize>>,
    /// Group means followed by `μ`, one row each.
    probes: Array2<f64>,
    pool: WordPool,
    word_clustering: Clustering,
    categories: Categories,
    observed: Evaluation,
    name_vectors: Array2<f64>,
}

impl Enumerator {
    /// Cluster names and words and run the observed selection.
    pub fn prepare(emb: &UnitEmbedding, names: &NameTable, config: &UbeConfig) -> Result<Self> {
        config.validate()?;
        let (names, _missing) = names.in_vocabulary(emb);
        if names.is_empty() {
            return Err(UbeError::config("no names are present in the embedding"));
        }
        let name_ranks: Vec<usize> = names.names().map(|n| emb.rank(n).expect("in vocabulary")).collect();
        let name_vectors = emb.matrix(&name_ranks);

        let name_clustering = kmeanspp(name_vectors.view(), config.kmeans(config.n, Domain::NameClustering))
            .map_err(|e| e.in_stage("clustering names"))?;
        let groups: Vec<Vec<usize>> = (0..config.n).map(|c| name_clustering.members(c)).collect();
        let mut probes = Array2::zeros((config.n + 1, emb.dim()));
        for (i, g) in groups.iter().enumerate() {
            probes.row_mut(i).assign(&mean_of(name_vectors.view(), g));
        }
        let all: Vec<usize> = (0..names.len()).collect();
        let all_mean = mean_of(name_vectors.view(), &all);
        let group_means: Vec<_> = (0..config.n).map(|i| probes.row(i)).collect();
        let mu = group_mu(&group_means, all_mean.view());
        probes.row_mut(config.n).assign(&mu);

        let pool = frequent_lowercase_words(emb, config.pool_size, config.underscore_as_space)
            .map_err(|e| e.in_stage("selecting attribute words"))?;
        let word_clustering = kmeanspp(pool.vectors.view(), config.kmeans(config.m, Domain::WordClustering))
            .map_err(|e| e.in_stage("clustering words"))?;
        let categories = Categories::new(pool.vectors.view(), word_clustering.assignment.clone(), config.m);

        let mut prepared = Enumerator {
            config: config.clone(),
            fingerprint: None,
            dim: emb.dim(),
            vocabulary_size: emb.len(),
            names,
            name_ranks,
            name_clustering,
            groups,
            probes,
            pool,
            word_clustering,
            categories,
            observed: Evaluation {
                n: config.n,
                sigma: Vec::new(),
                selections: None,
                attribute_means: None,
            },
            name_vectors,
        };
        prepared.observed = prepared.evaluate_with(prepared.probes.clone(), true);
        tracing::info!(
            target: "ube::enumerate",
            names = prepared.names.len(),
            words = prepared.pool.len(),
            complete = prepared.observed.sigma.iter().filter(|s| s.is_finite()).count(),
            "observed selection done"
        );
        Ok(prepared)
    }

    fn evaluate_with(&self, probes: Array2<f64>, keep: bool) -> Evaluation {
        let n = self.config.n;
        evaluate(
            self.pool.vectors.view(),
            self.pool.pool_mean.view(),
            &self.categories,
            probes.slice(ndarray::s![..n, ..]),
            probes.row(n),
            self.config.t,
            self.config.allow_multiplicities,
            keep,
        )
    }

    pub fn config(&self) -> &UbeConfig {
        &self.config
    }

    pub fn names(&self) -> &NameTable {
        &self.names
    }

    /// Member names of each raw group.
    pub fn groups(&self) -> Vec<Vec<&str>> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&k| self.names.records()[k].name.as_str()).collect())
            .collect()
    }

    pub fn name_clustering(&self) -> &Clustering {
        &self.name_clustering
    }

    pub fn word_clustering(&self) -> &Clustering {
        &self.word_clustering
    }

    pub fn pool(&self) -> &WordPool {
        &self.pool
    }

    pub fn categories(&self) -> &Categories {
        &self.categories
    }

    pub fn observed(&self) -> &Evaluation {
        &self.observed
    }

    /// Group means (rows `0..n`) and `μ` (row `n`).
    pub fn probes(&self) -> &Array2<f64> {
        &self.probes
    }

    /// Scores of all pairs, indexed `[j * n + i]`, after rotating the name
    /// side by `rotation`. Incomplete pairs score `−∞`.
    pub fn scores_under(&self, rotation: &Rotation) -> Vec<f64> {
        let mut probes = self.probes.clone();
        rotation.apply(&mut probes);
        self.evaluate_with(probes, false).sigma
    }

    /// Rotation `r` of the null, reproducible on its own.
    pub fn rotation(&self, r: usize) -> HaarRotation {
        let mut rng = rng::stream(self.config.seed, Domain::Rotation, r as u64);
        HaarRotation::sample(self.dim, &mut rng)
    }

    /// Scores under `R` independent Haar rotations, computed in parallel.
    pub fn null_scores(&self) -> NullScores {
        let total = self.config.rotations;
        let done = AtomicUsize::new(0);
        let step = (total / 10).max(1);
        let rows: Vec<Vec<f64>> = (0..total)
            .into_par_iter()
            .map(|r| {
                let row = self.scores_under(&Rotation::Haar(self.rotation(r)));
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if k % step == 0 {
                    tracing::info!(target: "ube::enumerate", done = k, total, "rotations");
                }
                row
            })
            .collect();
        NullScores::from_rotation_rows(self.config.n, self.config.m, self.dim, self.config.seed, &rows)
    }

    /// Whether `nulls` was produced for this configuration. The cache header
    /// does not cover `t`, the pool or the vectors themselves, so the first
    /// and last rotations are recomputed and must agree bit for bit.
    pub fn nulls_match(&self, nulls: &NullScores) -> bool {
        let (n, m, total) = (self.config.n, self.config.m, self.config.rotations);
        if !nulls.matches(n, m, total, self.dim, self.config.seed) {
            return false;
        }
        [0, total - 1].iter().all(|&r| {
            let scores = self.scores_under(&Rotation::Haar(self.rotation(r)));
            (0..n * m).all(|c| scores[c].to_bits() == nulls.pair(c % n, c / n)[r].to_bits())
        })
    }

    /// Attach the embedding fingerprint recorded in the report.
    pub fn with_fingerprint(mut self, fingerprint: String) -> Self {
        self.fingerprint = Some(fingerprint);
        self
    }

    /// Compute p-values, apply Benjamini–Hochberg over all complete pairs
    /// and assemble the ranked report.
    pub fn finish(&self, nulls: &NullScores) -> Result<AuditReport> {
        if !self.nulls_match(nulls) {
            return Err(UbeError::config("null scores were computed for a different configuration"));
        }
        let n = self.config.n;
        let m = self.config.m;
        let sigma = &self.observed.sigma;
        let family: Vec<usize> = (0..n * m).filter(|&c| sigma[c].is_finite()).collect();
        let pvalues: Vec<f64> = family
            .iter()
            .map(|&c| monte_carlo_pvalue(sigma[c], nulls.pair(c % n, c / n)))
            .collect();
        let (critical_p, reject) = if family.is_empty() {
            tracing::warn!(target: "ube::enumerate", "no complete pairs to test");
            (0.0, Vec::new())
        } else {
            let bh = benjamini_hochberg(&pvalues, self.config.alpha)?;
            (bh.critical_p, bh.reject)
        };
        let mut p_of = vec![None; n * m];
        let mut significant = vec![false; n * m];
        for (k, &c) in family.iter().enumerate() {
            p_of[c] = Some(pvalues[k]);
            significant[c] = reject[k];
        }

        let groups = self.group_reports()?;
        let presentation: Vec<usize> = {
            let mut pos = vec![0; n];
            for (p, g) in groups.iter().enumerate() {
                pos[g.cluster - 1] = p;
            }
            pos
        };

        let selections = self.observed.selections.as_ref().expect("observed keeps selections");
        let mut tests: Vec<WeatTest> = (0..m)
            .map(|j| {
                let mut pairs: Vec<PairResult> = (0..n)
                    .map(|i| {
                        let c = j * n + i;
                        let sel = &selections[c];
                        PairResult {
                            group: presentation[i] + 1,
                            words: sel.chosen.iter().map(|&w| self.pool.words[w].clone()).collect(),
                            complete: sel.complete,
                            sigma: sigma[c].is_finite().then_some(sigma[c]),
                            p_value: p_of[c],
                            significant: significant[c],
                        }
                    })
                    .collect();
                pairs.sort_by_key(|p| p.group);
                let total: f64 = pairs.iter().filter(|p| p.significant).filter_map(|p| p.sigma).sum();
                WeatTest {
                    category: j + 1,
                    category_size: self.categories.members[j].len(),
                    significant_pairs: pairs.iter().filter(|p| p.significant).count(),
                    total_significant_score: total,
                    pairs,
                }
            })
            .collect();
        tests.sort_by(|a, b| {
            (b.significant_pairs > 0)
                .cmp(&(a.significant_pairs > 0))
                .then(b.total_significant_score.total_cmp(&a.total_significant_score))
                .then(a.category.cmp(&b.category))
        });

        let means = self.observed.attribute_means.as_ref().expect("observed keeps means");
        let grid: Vec<Option<Array1<f64>>> = (0..n * m)
            .map(|c| if significant[c] { means[c].clone() } else { None })
            .collect();
        let indirect_bias: IndirectBiasSummary = proxy::summarize(&proxy::enumerate_fourtuples(n, m, &grid));

        Ok(AuditReport {
            schema_version: crate::report::SCHEMA_VERSION,
            config: self.config.clone(),
            run: RunMetadata {
                seed: self.config.seed,
                embedding_fingerprint: self.fingerprint.clone(),
                dim: self.dim,
                vocabulary_size: self.vocabulary_size,
                names_used: self.names.len(),
                pool_size: self.pool.len(),
                hypotheses: family.len(),
                significant: significant.iter().filter(|&&s| s).count(),
                wall_time_seconds: None,
            },
            critical_p,
            groups,
            tests,
            indirect_bias,
        })
    }

    /// Groups in presentation order: descending %F when every group has it,
    /// otherwise by the embedding rank of each group's most frequent name.
    fn group_reports(&self) -> Result<Vec<GroupReport>> {
        let k = self.config.illustrative_k;
        let mut out = Vec::with_capacity(self.groups.len());
        let mut first_rank = Vec::with_capacity(self.groups.len());
        for (i, members) in self.groups.iter().enumerate() {
            let names: Vec<&str> = members.iter().map(|&x| self.names.records()[x].name.as_str()).collect();
            let ranks: Vec<usize> = members.iter().map(|&x| self.name_ranks[x]).collect();
            first_rank.push(ranks.iter().copied().min().unwrap_or(usize::MAX));
            let vectors = self.name_vectors.select(Axis(0), members);
            let picks = illustrative_names(vectors.view(), &ranks, k, self.config.illustrative_similarity);
            out.push(GroupReport {
                id: 0,
                cluster: i + 1,
                size: members.len(),
                illustrative: picks.iter().map(|&p| names[p].to_string()).collect(),
                residual: members.len() - picks.len(),
                stats: demographic_summary(&names, &self.names)?,
                members: names.iter().map(|s| s.to_string()).collect(),
            });
        }
        if out.iter().all(|g| g.stats.pct_female.is_some()) {
            out.sort_by(|a, b| {
                b.stats
                    .pct_female
                    .unwrap()
                    .total_cmp(&a.stats.pct_female.unwrap())
                    .then(a.cluster.cmp(&b.cluster))
            });
        } else {
            out.sort_by_key(|g| (first_rank[g.cluster - 1], g.cluster));
        }
        for (p, g) in out.iter_mut().enumerate() {
            g.id = p + 1;
        }
        Ok(out)
    }
}

/// Options that affect how a run is carried out but not its result.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Reuse null scores from this file when they match, save them otherwise.
    pub null_cache: Option<PathBuf>,
    /// Store elapsed seconds in the report (makes it non-reproducible).
    pub record_wall_time: bool,
}

/// Run the whole pipeline with default options.
pub fn enumerate_biases(emb: &UnitEmbedding, names: &NameTable, config: &UbeConfig) -> Result<AuditReport> {
    run(emb, names, config, &RunOptions::default())
}

pub fn run(emb: &UnitEmbedding, names: &NameTable, config: &UbeConfig, options: &RunOptions) -> Result<AuditReport> {
    let started = Instant::now();
    let prepared = Enumerator::prepare(emb, names, config)?.with_fingerprint(emb.fingerprint());
    run_prepared(&prepared, options, started)
}

/// Finish a run from an already prepared pipeline. `started` is when the
/// run began, for the elapsed-time log line.
pub fn run_prepared(prepared: &Enumerator, options: &RunOptions, started: Instant) -> Result<AuditReport> {
    let cached = match &options.null_cache {
        Some(path) if path.exists() => match NullScores::load(path) {
            Ok(nulls) if prepared.nulls_match(&nulls) => {
                tracing::info!(target: "ube::enumerate", path = %path.display(), "reusing cached null scores");
                Some(nulls)
            }
            Ok(_) => {
                tracing::warn!(target: "ube::enumerate", "cached null scores do not match, recomputing");
                None
            }
            Err(e) => return Err(e.in_stage("reading null cache")),
        },
        _ => None,
    };
    let nulls = match cached {
        Some(n) => n,
        None => {
            let nulls = prepared.null_scores();
            if let Some(path) = &options.null_cache {
                nulls.save(path).map_err(|e| e.in_stage("writing null cache"))?;
            }
            nulls
        }
    };

    let mut report = prepared.finish(&nulls).map_err(|e| e.in_stage("testing pairs"))?;
    let elapsed = started.elapsed().as_secs_f64();
    tracing::info!(
        target: "ube::enumerate",
        seconds = elapsed,
        significant = report.run.significant,
        hypotheses = report.run.hypotheses,
        "enumeration finished"
    );
    if options.record_wall_time {
        report.run.wall_time_seconds = Some(elapsed);
    }
    Ok(report)
}
