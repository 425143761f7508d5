//! Audit reports: illustrative names, rendering to JSON, CSV and Markdown,
//! and name-frequency data for Zipf plots.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::embedding::UnitEmbedding;
use crate::enumerate::UbeConfig;
use crate::names::{GroupStats, NameTable};
use crate::proxy::IndirectBiasSummary;
use crate::{Result, UbeError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub config: UbeConfig,
    pub run: RunMetadata,
    pub critical_p: f64,
    /// Name groups in presentation order.
    pub groups: Vec<GroupReport>,
    /// Tests, most significant first.
    pub tests: Vec<WeatTest>,
    pub indirect_bias: IndirectBiasSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub embedding_fingerprint: Option<String>,
    pub dim: usize,
    pub vocabulary_size: usize,
    pub names_used: usize,
    pub pool_size: usize,
    /// Complete pairs, i.e. the size of the tested family.
    pub hypotheses: usize,
    pub significant: usize,
    pub wall_time_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    /// 1-based position in presentation order; pairs refer to this id.
    pub id: usize,
    /// 1-based cluster id from the name clustering.
    pub cluster: usize,
    pub size: usize,
    pub illustrative: Vec<String>,
    /// Members not shown among the illustrative names.
    pub residual: usize,
    pub stats: GroupStats,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatTest {
    /// 1-based word cluster id.
    pub category: usize,
    pub category_size: usize,
    pub significant_pairs: usize,
    pub total_significant_score: f64,
    /// One entry per group, by group id.
    pub pairs: Vec<PairResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub group: usize,
    /// Selected words, best first. For an incomplete pair, every candidate.
    pub words: Vec<String>,
    pub complete: bool,
    /// Absent for incomplete pairs.
    pub sigma: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
}

impl AuditReport {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| UbeError::format(e.line(), e.to_string()))
    }

    pub fn group(&self, id: usize) -> &GroupReport {
        &self.groups[id - 1]
    }
}

/// How candidate illustrative sets are compared with the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    /// Mean of the chosen unit vectors dotted with the group mean: the mean
    /// cosine between chosen names and group members.
    InnerProduct,
    /// Cosine between the sum of chosen vectors and the group mean.
    Cosine,
}

/// Greedily pick `k` rows of `vectors` so that each prefix is as similar as
/// possible to the mean of all rows. Ties go to the lower `ranks` entry.
/// Returns row indices in pick order.
pub fn illustrative_names(vectors: ArrayView2<'_, f64>, ranks: &[usize], k: usize, similarity: Similarity) -> Vec<usize> {
    let count = vectors.nrows();
    assert_eq!(ranks.len(), count);
    if k > count {
        tracing::warn!(target: "ube::report", k, available = count, "group smaller than requested illustrative names");
    }
    let k = k.min(count);
    if count == 0 {
        return Vec::new();
    }
    let center = vectors.mean_axis(Axis(0)).expect("nonempty");
    let to_center = vectors.dot(&center);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; count];
    let mut sum = Array1::<f64>::zeros(vectors.ncols());
    let mut sum_dot = 0.0;
    while chosen.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for w in (0..count).filter(|&w| !taken[w]) {
            let score = match similarity {
                Similarity::InnerProduct => sum_dot + to_center[w],
                Similarity::Cosine => {
                    let row = vectors.row(w);
                    let norm_sq = sum.dot(&sum) + 2.0 * sum.dot(&row) + row.dot(&row);
                    (sum_dot + to_center[w]) / norm_sq.sqrt()
                }
            };
            let better = match best {
                None => true,
                Some((s, b)) => score > s || (score == s && ranks[w] < ranks[b]),
            };
            if better {
                best = Some((score, w));
            }
        }
        let (_, w) = best.expect("a candidate remains");
        taken[w] = true;
        sum += &vectors.row(w);
        sum_dot += to_center[w];
        chosen.push(w);
    }
    chosen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = UbeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(UbeError::config(format!("unknown report format {other:?}"))),
        }
    }
}

/// Presentation settings for the human-readable formats.
#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Words shown as `***` in Markdown and CSV output.
    pub mask: HashSet<String>,
    /// Prepend a content warning to Markdown output.
    pub warning_banner: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            mask: HashSet::new(),
            warning_banner: true,
        }
    }
}

impl RenderOptions {
    fn word<'a>(&self, w: &'a str) -> &'a str {
        if self.mask.contains(w) {
            "***"
        } else {
            w
        }
    }
}

pub fn render(report: &AuditReport, format: Format, options: &RenderOptions) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(|e| UbeError::config(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => render_csv(report, options),
        Format::Markdown => Ok(render_markdown(report, options).into_bytes()),
    }
}

fn render_csv(report: &AuditReport, options: &RenderOptions) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    let csv_err = crate::cluster::csv_err;
    out.write_record(["category", "group", "words", "sigma", "p_value", "significant"])
        .map_err(csv_err)?;
    for test in &report.tests {
        for pair in test.pairs.iter().filter(|p| p.complete) {
            let words: Vec<&str> = pair.words.iter().map(|w| options.word(w)).collect();
            out.write_record([
                test.category.to_string(),
                pair.group.to_string(),
                words.join(";"),
                pair.sigma.map(|s| s.to_string()).unwrap_or_default(),
                pair.p_value.map(|p| p.to_string()).unwrap_or_default(),
                pair.significant.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.into_inner().map_err(|e| UbeError::Io(e.into_error()))
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|")
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

fn render_markdown(report: &AuditReport, options: &RenderOptions) -> String {
    let mut s = String::new();
    let cfg = &report.config;
    let _ = writeln!(s, "# Word embedding association audit\n");
    if options.warning_banner {
        let _ = writeln!(
            s,
            "> **Warning:** the word lists below are produced automatically from the embedding \
             and may contain offensive terms.\n"
        );
    }
    let _ = writeln!(
        s,
        "{} names in {} groups, {} words in {} categories, t = {}, alpha = {}, {} rotations, seed {}.\n",
        report.run.names_used,
        report.groups.len(),
        report.run.pool_size,
        cfg.m,
        cfg.t,
        cfg.alpha,
        cfg.rotations,
        report.run.seed
    );
    let _ = writeln!(
        s,
        "{} of {} tested pairs are significant (critical p = {}).\n",
        report.run.significant, report.run.hypotheses, report.critical_p
    );

    let header = |s: &mut String, first: &str| {
        let _ = write!(s, "| {first} |");
        for g in &report.groups {
            let _ = write!(s, " G{} |", g.id);
        }
        s.push('\n');
        s.push_str("|---|");
        for _ in &report.groups {
            s.push_str("---|");
        }
        s.push('\n');
    };

    s.push_str("## Groups\n\n");
    header(&mut s, "");
    let row = |s: &mut String, label: &str, f: &dyn Fn(&GroupReport) -> String| {
        let _ = write!(s, "| {label} |");
        for g in &report.groups {
            let _ = write!(s, " {} |", cell(&f(g)));
        }
        s.push('\n');
    };
    row(&mut s, "Names", &|g| {
        let mut t = g.illustrative.join(", ");
        if g.residual > 0 {
            let _ = write!(t, " +{}", g.residual);
        }
        t
    });
    row(&mut s, "Size", &|g| g.size.to_string());
    type Field = fn(&GroupStats) -> Option<f64>;
    let stats: [(&str, Field, usize); 7] = [
        ("%F", |st| st.pct_female, 0),
        ("Birth year", |st| st.mean_birth_year, 0),
        ("%Black", |st| st.pct_black, 1),
        ("%Hispanic", |st| st.pct_hispanic, 1),
        ("%Asian/PI", |st| st.pct_asian_pacific, 1),
        ("%White", |st| st.pct_white, 1),
        ("%Native", |st| st.pct_native, 1),
    ];
    for (label, field, digits) in stats {
        if report.groups.iter().any(|g| field(&g.stats).is_some()) {
            row(&mut s, label, &|g| fmt_opt(field(&g.stats), digits));
        }
    }
    s.push('\n');

    if report.run.significant == 0 {
        s.push_str("No significant associations were found.\n");
        return s;
    }
    s.push_str("## Associations\n\n");
    header(&mut s, "Category");
    for test in report.tests.iter().filter(|t| t.significant_pairs > 0) {
        let _ = write!(s, "| C{} ({} words) |", test.category, test.category_size);
        for g in &report.groups {
            let text = test
                .pairs
                .iter()
                .find(|p| p.group == g.id && p.significant)
                .map(|p| p.words.iter().map(|w| options.word(w)).collect::<Vec<_>>().join(", "))
                .unwrap_or_default();
            let _ = write!(s, " {} |", cell(&text));
        }
        s.push('\n');
    }
    s.push('\n');
    let ib = &report.indirect_bias;
    match ib.fraction_positive {
        Some(f) => {
            let _ = writeln!(
                s,
                "Potential indirect biases: {} of {} fourtuples ({:.1}%).",
                ib.positive,
                ib.fourtuples,
                100.0 * f
            );
        }
        None => s.push_str("Potential indirect biases: no fourtuples of significant pairs.\n"),
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfRow {
    pub name: String,
    /// Frequency rank in the embedding, if present.
    pub rank_index: Option<usize>,
    /// `ln(count / total count)`.
    pub log_probability: f64,
    pub kept: bool,
}

/// One row per name in table order.
pub fn zipf_plot_data(names: &NameTable, emb: &UnitEmbedding, removed: &HashSet<String>) -> Vec<ZipfRow> {
    let total: u64 = names.records().iter().map(|r| r.total_count).sum();
    names
        .records()
        .iter()
        .map(|r| {
            let rank_index = emb.rank(&r.name);
            ZipfRow {
                name: r.name.clone(),
                rank_index,
                log_probability: (r.total_count as f64 / total as f64).ln(),
                // names without a vector never reach cleaning
                kept: rank_index.is_some() && !removed.contains(&r.name),
            }
        })
        .collect()
}

pub fn write_zipf_csv<W: Write>(rows: &[ZipfRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row).map_err(crate::cluster::csv_err)?;
    }
    out.flush()?;
    Ok(())
}
