//! SSA baby-name files and the Census surname table.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{NameRecord, NameSource, NameTable, RacePcts};
use crate::{Result, UbeError};

pub const SSA_YEAR_MIN: i32 = 1938;
pub const SSA_YEAR_MAX: i32 = 2017;
pub const SSA_MIN_COUNT: u64 = 1000;

#[derive(Default)]
struct Tally {
    female: u64,
    male: u64,
    year_weighted: u128,
}

fn ssa_year(file_name: &str) -> Option<i32> {
    let digits = file_name.strip_prefix("yob")?.strip_suffix(".txt")?;
    (digits.len() == 4 && digits.bytes().all(|b| b.is_ascii_digit()))
        .then(|| digits.parse().ok())
        .flatten()
}

/// Aggregate `yobYYYY.txt` files (`name,sex,count` lines) over
/// `[year_min, year_max]`, keeping names with at least `min_count` births.
///
/// Records come out sorted by descending count, then name.
pub fn ingest_ssa(dir: impl AsRef<Path>, year_min: i32, year_max: i32, min_count: u64) -> Result<NameTable> {
    let dir = dir.as_ref();
    if year_min > year_max {
        return Err(UbeError::config(format!("year range {year_min}..={year_max} is empty")));
    }
    let entries = fs::read_dir(dir)
        .map_err(|e| UbeError::Ingest(format!("cannot read {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| UbeError::Ingest(e.to_string()))?;
        let name = entry.file_name();
        if let Some(year) = name.to_str().and_then(ssa_year) {
            if (year_min..=year_max).contains(&year) {
                files.push((year, entry.path()));
            }
        }
    }
    files.sort();

    let mut tallies: BTreeMap<String, Tally> = BTreeMap::new();
    let mut skipped = 0;
    for (year, path) in &files {
        let text = fs::read_to_string(path)
            .map_err(|e| UbeError::Ingest(format!("cannot read {}: {e}", path.display())))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parsed = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(name), Some(sex), Some(count), None) if !name.is_empty() => {
                    count.trim().parse::<u64>().ok().and_then(|c| match sex.trim() {
                        "F" => Some((name, true, c)),
                        "M" => Some((name, false, c)),
                        _ => None,
                    })
                }
                _ => None,
            };
            let Some((name, female, count)) = parsed else {
                skipped += 1;
                continue;
            };
            let t = tallies.entry(name.to_string()).or_default();
            if female {
                t.female += count;
            } else {
                t.male += count;
            }
            t.year_weighted += u128::from(count) * (*year as u128);
        }
    }
    if skipped > 0 {
        tracing::warn!(target: "ube::names", skipped, "malformed SSA lines skipped");
    }

    let mut records: Vec<NameRecord> = tallies
        .into_iter()
        .filter_map(|(name, t)| {
            let total = t.female + t.male;
            (total >= min_count && total > 0).then(|| NameRecord {
                name,
                total_count: total,
                fraction_female: Some(t.female as f64 / total as f64),
                mean_birth_year: Some(t.year_weighted as f64 / total as f64),
                race_pcts: None,
            })
        })
        .collect();
    records.sort_by(|a, b| b.total_count.cmp(&a.total_count).then_with(|| a.name.cmp(&b.name)));
    tracing::info!(target: "ube::names", files = files.len(), names = records.len(), "ingested SSA names");
    let mut table = NameTable::new(records, NameSource::Ssa)?;
    table.skipped_lines = skipped;
    Ok(table)
}

/// How to recase Census surnames (published in upper case) to match the
/// embedding vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurnameCase {
    #[default]
    Title,
    Lower,
    Upper,
    AsIs,
}

impl SurnameCase {
    fn apply(self, name: &str) -> String {
        match self {
            SurnameCase::AsIs => name.to_string(),
            SurnameCase::Upper => name.to_uppercase(),
            SurnameCase::Lower => name.to_lowercase(),
            SurnameCase::Title => {
                let lower = name.to_lowercase();
                let mut chars = lower.chars();
                match chars.next() {
                    Some(c) => c.to_uppercase().chain(chars).collect(),
                    None => String::new(),
                }
            }
        }
    }
}

/// Read a Census surname CSV with a header row. `name` and `count` columns are
/// required; `pctwhite`, `pctblack`, `pctapi`, `pctaian` and `pcthispanic` are
/// used when present. Non-numeric percentages such as `(S)` are suppressed
/// values and become `None`.
pub fn ingest_census_surnames(path: impl AsRef<Path>, min_count: u64, case: SurnameCase) -> Result<NameTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| UbeError::Ingest(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| UbeError::Ingest(e.to_string()))?
        .clone();
    let column = |want: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(want));
    let name_col = column("name").ok_or_else(|| UbeError::Ingest("missing column \"name\"".into()))?;
    let count_col = column("count").ok_or_else(|| UbeError::Ingest("missing column \"count\"".into()))?;
    let race_cols = [
        column("pctblack"),
        column("pcthispanic"),
        column("pctapi"),
        column("pctwhite"),
        column("pctaian"),
    ];
    let has_race = race_cols.iter().any(Option::is_some);

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut skipped = 0;
    for row in reader.records() {
        let row = row.map_err(|e| UbeError::Ingest(e.to_string()))?;
        let name = row.get(name_col).map(str::trim).unwrap_or_default();
        let count = row
            .get(count_col)
            .and_then(|c| c.trim().replace(',', "").parse::<u64>().ok());
        let (false, Some(count)) = (name.is_empty(), count) else {
            skipped += 1;
            continue;
        };
        if count < min_count {
            continue;
        }
        let pct = |col: Option<usize>| col.and_then(|c| row.get(c)).and_then(|v| v.trim().parse::<f64>().ok());
        let race_pcts = has_race.then(|| RacePcts {
            black: pct(race_cols[0]),
            hispanic: pct(race_cols[1]),
            asian_pacific: pct(race_cols[2]),
            white: pct(race_cols[3]),
            native: pct(race_cols[4]),
        });
        let name = case.apply(name);
        if !seen.insert(name.clone()) {
            skipped += 1;
            continue;
        }
        records.push(NameRecord {
            name,
            total_count: count,
            fraction_female: None,
            mean_birth_year: None,
            race_pcts,
        });
    }
    if skipped > 0 {
        tracing::warn!(target: "ube::names", skipped, "malformed or duplicate surname rows skipped");
    }
    let mut table = NameTable::new(records, NameSource::Census)?;
    table.skipped_lines = skipped;
    Ok(table)
}
