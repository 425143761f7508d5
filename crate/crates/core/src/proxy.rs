//! Potential indirect bias: two groups and two categories whose selected
//! word sets differ along a common direction.

use std::io::Write;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::embedding::UnitEmbedding;
use crate::report::AuditReport;
use crate::Result;

/// True when `(Ā_ij − Ā_i'j)·(Ā_ij' − Ā_i'j') > 0`. An exact zero is not a
/// potential indirect bias.
pub fn is_potential_indirect_bias(
    a_ij: ArrayView1<'_, f64>,
    a_i2j: ArrayView1<'_, f64>,
    a_ij2: ArrayView1<'_, f64>,
    a_i2j2: ArrayView1<'_, f64>,
) -> bool {
    alignment(a_ij, a_i2j, a_ij2, a_i2j2) > 0.0
}

fn alignment(
    a_ij: ArrayView1<'_, f64>,
    a_i2j: ArrayView1<'_, f64>,
    a_ij2: ArrayView1<'_, f64>,
    a_i2j2: ArrayView1<'_, f64>,
) -> f64 {
    let mut acc = 0.0;
    for k in 0..a_ij.len() {
        acc += (a_ij[k] - a_i2j[k]) * (a_ij2[k] - a_i2j2[k]);
    }
    acc
}

/// Groups `i < i2` and categories `j < j2`, all 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourTuple {
    pub i: usize,
    pub i2: usize,
    pub j: usize,
    pub j2: usize,
    pub alignment: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndirectBiasSummary {
    pub fourtuples: usize,
    pub positive: usize,
    /// Absent when there are no fourtuples.
    pub fraction_positive: Option<f64>,
}

/// Every fourtuple whose four pairs are all present in `grid`, which holds
/// the attribute mean of each significant pair at `[j * n + i]`.
pub fn enumerate_fourtuples(n: usize, m: usize, grid: &[Option<Array1<f64>>]) -> Vec<FourTuple> {
    assert_eq!(grid.len(), n * m);
    let at = |i: usize, j: usize| grid[j * n + i].as_ref();
    let mut out = Vec::new();
    for j in 0..m {
        for j2 in j + 1..m {
            for i in 0..n {
                let (Some(a), Some(c)) = (at(i, j), at(i, j2)) else {
                    continue;
                };
                for i2 in i + 1..n {
                    let (Some(b), Some(d)) = (at(i2, j), at(i2, j2)) else {
                        continue;
                    };
                    let dot = alignment(a.view(), b.view(), c.view(), d.view());
                    out.push(FourTuple {
                        i: i + 1,
                        i2: i2 + 1,
                        j: j + 1,
                        j2: j2 + 1,
                        alignment: dot,
                        verdict: dot > 0.0,
                    });
                }
            }
        }
    }
    out
}

pub fn summarize(fourtuples: &[FourTuple]) -> IndirectBiasSummary {
    let positive = fourtuples.iter().filter(|f| f.verdict).count();
    IndirectBiasSummary {
        fourtuples: fourtuples.len(),
        positive,
        fraction_positive: (!fourtuples.is_empty()).then(|| positive as f64 / fourtuples.len() as f64),
    }
}

/// Significant-pair grid of a report, with means recomputed from `emb`.
/// Group indices follow the report's presentation ids.
pub fn significant_grid(report: &AuditReport, emb: &UnitEmbedding) -> Result<(usize, usize, Vec<Option<Array1<f64>>>)> {
    let n = report.groups.len();
    let m = report.tests.len();
    let mut order: Vec<usize> = report.tests.iter().map(|t| t.category).collect();
    order.sort_unstable();
    let mut grid = vec![None; n * m];
    for test in &report.tests {
        let j = order.binary_search(&test.category).expect("category listed");
        for pair in test.pairs.iter().filter(|p| p.significant) {
            let mean = crate::weat::set_mean(&pair.words, emb)?;
            grid[j * n + pair.group - 1] = Some(mean);
        }
    }
    Ok((n, m, grid))
}

/// All fourtuples over the significant pairs of `report`, with groups
/// numbered by presentation id and categories by category id order.
pub fn report_fourtuples(report: &AuditReport, emb: &UnitEmbedding) -> Result<Vec<FourTuple>> {
    let mut order: Vec<usize> = report.tests.iter().map(|t| t.category).collect();
    order.sort_unstable();
    let (n, m, grid) = significant_grid(report, emb)?;
    let mut tuples = enumerate_fourtuples(n, m, &grid);
    for f in &mut tuples {
        f.j = order[f.j - 1];
        f.j2 = order[f.j2 - 1];
    }
    Ok(tuples)
}

pub fn indirect_bias_rate(report: &AuditReport, emb: &UnitEmbedding) -> Result<IndirectBiasSummary> {
    Ok(summarize(&report_fourtuples(report, emb)?))
}

pub fn write_fourtuples_csv<W: Write>(tuples: &[FourTuple], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for t in tuples {
        out.serialize(t).map_err(crate::cluster::csv_err)?;
    }
    out.flush()?;
    Ok(())
}
