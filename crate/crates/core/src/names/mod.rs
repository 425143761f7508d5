//! Target-name datasets: ingestion, cleaning against an embedding, and
//! a-posteriori demographics of name groups.

mod clean;
mod ingest;
pub mod svm;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::embedding::UnitEmbedding;
use crate::{Result, UbeError};

pub use clean::{clean_names, CleanMethod, Cleaning, CleaningParams};
pub use ingest::{ingest_census_surnames, ingest_ssa, SurnameCase, SSA_MIN_COUNT, SSA_YEAR_MAX, SSA_YEAR_MIN};

/// Race/ethnicity percentages from the Census surname file. A field is
/// `None` when the value was suppressed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RacePcts {
    pub black: Option<f64>,
    pub hispanic: Option<f64>,
    pub asian_pacific: Option<f64>,
    pub white: Option<f64>,
    pub native: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameRecord {
    pub name: String,
    pub total_count: u64,
    pub fraction_female: Option<f64>,
    pub mean_birth_year: Option<f64>,
    pub race_pcts: Option<RacePcts>,
}

impl NameRecord {
    pub fn bare(name: impl Into<String>, total_count: u64) -> Self {
        NameRecord {
            name: name.into(),
            total_count,
            fraction_female: None,
            mean_birth_year: None,
            race_pcts: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameSource {
    Ssa,
    Census,
    Custom,
}

/// An ordered list of unique names.
#[derive(Debug, Clone)]
pub struct NameTable {
    records: Vec<NameRecord>,
    source: NameSource,
    index: HashMap<String, usize>,
    /// Input lines skipped as malformed during ingestion.
    pub skipped_lines: usize,
}

impl NameTable {
    pub fn new(records: Vec<NameRecord>, source: NameSource) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.name.clone(), i).is_some() {
                return Err(UbeError::config(format!("duplicate name {:?}", r.name)));
            }
        }
        Ok(NameTable {
            records,
            source,
            index,
            skipped_lines: 0,
        })
    }

    pub fn records(&self) -> &[NameRecord] {
        &self.records
    }

    pub fn source(&self) -> NameSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&NameRecord> {
        self.index.get(name).map(|&i| &self.records[i])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.name.as_str())
    }

    /// Keep the records satisfying `keep`, preserving order.
    pub fn filtered(&self, mut keep: impl FnMut(&NameRecord) -> bool) -> NameTable {
        let records = self.records.iter().filter(|r| keep(r)).cloned().collect();
        let mut out = NameTable::new(records, self.source).expect("subset of unique names");
        out.skipped_lines = self.skipped_lines;
        out
    }

    /// Split into names present in `emb` and the list of absent ones.
    pub fn in_vocabulary(&self, emb: &UnitEmbedding) -> (NameTable, Vec<String>) {
        let missing: Vec<String> = self
            .names()
            .filter(|n| !emb.contains(n))
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            tracing::warn!(
                target: "ube::names",
                count = missing.len(),
                "names absent from the embedding were dropped"
            );
        }
        (self.filtered(|r| emb.contains(&r.name)), missing)
    }
}

/// Unweighted per-name means over a group; each field averages only the names
/// that carry it. `pct_female` is in percent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub size: usize,
    pub pct_female: Option<f64>,
    pub mean_birth_year: Option<f64>,
    pub pct_black: Option<f64>,
    pub pct_hispanic: Option<f64>,
    pub pct_asian_pacific: Option<f64>,
    pub pct_white: Option<f64>,
    pub pct_native: Option<f64>,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    count: usize,
}

impl Mean {
    fn add(&mut self, x: Option<f64>) {
        if let Some(x) = x {
            self.sum += x;
            self.count += 1;
        }
    }

    fn get(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

pub fn demographic_summary<S: AsRef<str>>(group: &[S], table: &NameTable) -> Result<GroupStats> {
    if group.is_empty() {
        return Err(UbeError::config("demographic summary of an empty group"));
    }
    let mut female = Mean::default();
    let mut year = Mean::default();
    let mut race: [Mean; 5] = Default::default();
    for name in group {
        let name = name.as_ref();
        let rec = table
            .get(name)
            .ok_or_else(|| UbeError::UnknownToken(name.to_string()))?;
        female.add(rec.fraction_female.map(|f| 100.0 * f));
        year.add(rec.mean_birth_year);
        if let Some(p) = rec.race_pcts {
            for (acc, v) in race.iter_mut().zip([p.black, p.hispanic, p.asian_pacific, p.white, p.native]) {
                acc.add(v);
            }
        }
    }
    Ok(GroupStats {
        size: group.len(),
        pct_female: female.get(),
        mean_birth_year: year.get(),
        pct_black: race[0].get(),
        pct_hispanic: race[1].get(),
        pct_asian_pacific: race[2].get(),
        pct_white: race[3].get(),
        pct_native: race[4].get(),
    })
}
