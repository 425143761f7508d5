//! Synthetic embeddings and name lists shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ube::embedding::{normalize, RawEmbedding, UnitEmbedding};
use ube::names::{NameRecord, NameSource, NameTable};
use ube::report::AuditReport;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut v = gaussian(rng, d);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// `coef·base + noise·z` with `z` uniform on the unit sphere, normalized.
pub fn around(rng: &mut impl Rng, base: &[f64], coef: f64, noise: f64) -> Vec<f64> {
    let z = unit(rng, base.len());
    let mut v: Vec<f64> = base.iter().zip(&z).map(|(b, z)| coef * b + noise * z).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Distinct lower-case letter strings.
pub fn letters(mut k: usize, width: usize) -> String {
    let mut out = vec![b'a'; width];
    for slot in out.iter_mut().rev() {
        *slot = b'a' + (k % 26) as u8;
        k /= 26;
    }
    String::from_utf8(out).unwrap()
}

pub fn word_token(k: usize) -> String {
    format!("w{}", letters(k, 4))
}

pub fn name_token(k: usize) -> String {
    format!("N{}", letters(k, 4))
}

pub struct Synthetic {
    pub emb: UnitEmbedding,
    pub names: NameTable,
    pub words: Vec<String>,
}

/// Words come first in rank order, then names. Name counts decrease with
/// index so the table order matches rank order.
pub fn build(words: &[Vec<f64>], names: &[Vec<f64>]) -> Synthetic {
    let d = words.first().or(names.first()).map(Vec::len).unwrap();
    let mut rows = Vec::with_capacity(words.len() + names.len());
    let word_tokens: Vec<String> = (0..words.len()).map(word_token).collect();
    for (t, v) in word_tokens.iter().zip(words) {
        rows.push((t.clone(), v.iter().map(|&x| x as f32).collect::<Vec<f32>>()));
    }
    let mut records = Vec::with_capacity(names.len());
    for (k, v) in names.iter().enumerate() {
        let t = name_token(k);
        rows.push((t.clone(), v.iter().map(|&x| x as f32).collect()));
        records.push(NameRecord::bare(t, (10 * (names.len() - k)) as u64));
    }
    Synthetic {
        emb: normalize(RawEmbedding::from_rows(d, rows).unwrap()),
        names: NameTable::new(records, NameSource::Custom).unwrap(),
        words: word_tokens,
    }
}

/// Names and words drawn independently and uniformly on the sphere.
pub fn null_fixture(seed: u64, n_names: usize, n_words: usize, d: usize) -> Synthetic {
    let mut r = rng(seed);
    let words: Vec<_> = (0..n_words).map(|_| unit(&mut r, d)).collect();
    let names: Vec<_> = (0..n_names).map(|_| unit(&mut r, d)).collect();
    build(&words, &names)
}

pub struct Planted {
    pub fixture: Synthetic,
    /// Name indices of planted group `k`.
    pub groups: Vec<Vec<usize>>,
    /// Word indices of planted category `k`.
    pub categories: Vec<Vec<usize>>,
}

/// `signal·p + noise` with isotropic Gaussian noise of the given standard
/// deviation per coordinate, normalized.
pub fn planted_vector(rng: &mut impl Rng, p: &[f64], signal: f64, sd: f64) -> Vec<f64> {
    let mut v: Vec<f64> = p.iter().map(|x| signal * x + sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Planted pair `k` gets a direction `p_k`; its group names and category
/// words are `0.4·p_k + N(0, 0.1²·I)`. The remaining names and words are
/// uniform directions. Directions come in antipodal pairs (`p_1 = -p_0`, ...)
/// so the planted vectors leave the name mean and the pool mean unbiased;
/// otherwise every unplanted group and category sits on the far side of those
/// means and their pairs carry a genuine positive association.
pub fn planted_fixture(
    seed: u64,
    pairs: usize,
    names_per_group: usize,
    other_names: usize,
    words_per_category: usize,
    other_words: usize,
    d: usize,
) -> Planted {
    let mut r = rng(seed);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(pairs);
    for k in 0..pairs {
        let p = if k % 2 == 1 { dirs[k - 1].iter().map(|x| -x).collect() } else { unit(&mut r, d) };
        dirs.push(p);
    }
    let mut words = Vec::new();
    let mut categories = Vec::new();
    for p in &dirs {
        let start = words.len();
        for _ in 0..words_per_category {
            words.push(planted_vector(&mut r, p, 0.4, 0.1));
        }
        categories.push((start..words.len()).collect());
    }
    for _ in 0..other_words {
        words.push(unit(&mut r, d));
    }
    let mut names = Vec::new();
    let mut groups = Vec::new();
    for p in &dirs {
        let start = names.len();
        for _ in 0..names_per_group {
            names.push(planted_vector(&mut r, p, 0.4, 0.1));
        }
        groups.push((start..names.len()).collect());
    }
    for _ in 0..other_names {
        names.push(unit(&mut r, d));
    }
    Planted {
        fixture: build(&words, &names),
        groups,
        categories,
    }
}

impl Planted {
    /// Report group id holding most of planted group `k`.
    pub fn report_group(&self, report: &AuditReport, k: usize) -> Option<usize> {
        let wanted: HashSet<String> = self.groups[k].iter().map(|&x| name_token(x)).collect();
        report
            .groups
            .iter()
            .map(|g| (g.members.iter().filter(|m| wanted.contains(*m)).count(), g.id))
            .filter(|&(hits, _)| 2 * hits > wanted.len())
            .map(|(_, id)| id)
            .next()
    }

    pub fn category_words(&self, k: usize) -> HashSet<String> {
        self.categories[k].iter().map(|&x| word_token(x)).collect()
    }

    /// The report pair (group id, category id) recovering planted pair `k`:
    /// a significant pair of the matching group whose words all come from
    /// planted category `k`.
    pub fn recovered(&self, report: &AuditReport, k: usize) -> Option<(usize, usize)> {
        let id = self.report_group(report, k)?;
        let words = self.category_words(k);
        report.tests.iter().find_map(|t| {
            t.pairs
                .iter()
                .find(|p| p.group == id && p.significant && p.words.iter().all(|w| words.contains(w)))
                .map(|_| (id, t.category))
        })
    }
}
