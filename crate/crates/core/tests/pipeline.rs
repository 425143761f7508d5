mod common;

use std::collections::HashSet;
use std::fs;

use common::*;
use ube::enumerate::{enumerate_biases, run, Enumerator, RunOptions, UbeConfig};
use ube::names::ingest_ssa;
use ube::proxy::indirect_bias_rate;
use ube::report::{render, AuditReport, Format, RenderOptions};

fn planted_config(seed: u64) -> UbeConfig {
    UbeConfig {
        n: 4,
        m: 6,
        t: 3,
        pool_size: 320,
        rotations: 500,
        seed,
        ..Default::default()
    }
}

fn planted_report(seed: u64) -> (Planted, AuditReport) {
    let pf = planted_fixture(500 + seed, 2, 40, 120, 40, 240, 50);
    let report = enumerate_biases(&pf.fixture.emb, &pf.fixture.names, &planted_config(seed)).unwrap();
    (pf, report)
}

#[test]
fn same_seed_same_bytes() {
    let (pf, a) = planted_report(1);
    let b = enumerate_biases(&pf.fixture.emb, &pf.fixture.names, &planted_config(1)).unwrap();
    let opts = RenderOptions::default();
    for format in [Format::Json, Format::Csv, Format::Markdown] {
        assert_eq!(render(&a, format, &opts).unwrap(), render(&b, format, &opts).unwrap());
    }
}

#[test]
fn json_round_trip_is_byte_identical() {
    let (_, report) = planted_report(2);
    let bytes = render(&report, Format::Json, &RenderOptions::default()).unwrap();
    let back = AuditReport::from_json(&bytes).unwrap();
    assert_eq!(back, report);
    assert_eq!(render(&back, Format::Json, &RenderOptions::default()).unwrap(), bytes);
}

#[test]
fn report_structure() {
    let (pf, report) = planted_report(3);
    let n = report.config.n;
    assert_eq!(report.groups.len(), n);
    assert_eq!(report.tests.len(), report.config.m);
    let ids: Vec<usize> = report.groups.iter().map(|g| g.id).collect();
    assert_eq!(ids, (1..=n).collect::<Vec<_>>());
    let mut clusters: Vec<usize> = report.groups.iter().map(|g| g.cluster).collect();
    clusters.sort_unstable();
    assert_eq!(clusters, (1..=n).collect::<Vec<_>>());
    let members: usize = report.groups.iter().map(|g| g.members.len()).sum();
    assert_eq!(members, pf.fixture.names.len());
    for g in &report.groups {
        assert_eq!(g.illustrative.len() + g.residual, g.size);
    }
    // No %F for these names, so groups follow their most frequent member.
    let first: Vec<usize> = report
        .groups
        .iter()
        .map(|g| g.members.iter().map(|m| pf.fixture.emb.rank(m).unwrap()).min().unwrap())
        .collect();
    assert!(first.windows(2).all(|w| w[0] < w[1]), "{first:?}");

    let complete = report.tests.iter().flat_map(|t| &t.pairs).filter(|p| p.complete).count();
    assert_eq!(complete, report.run.hypotheses);
    let significant = report.tests.iter().flat_map(|t| &t.pairs).filter(|p| p.significant).count();
    assert_eq!(significant, report.run.significant);
    for p in report.tests.iter().flat_map(|t| &t.pairs) {
        assert_eq!(p.complete, p.sigma.is_some());
        assert_eq!(p.complete, p.p_value.is_some());
        if p.complete {
            assert_eq!(p.words.len(), report.config.t);
            assert_eq!(p.words.iter().collect::<HashSet<_>>().len(), p.words.len());
        }
        if p.significant {
            assert!(p.p_value.unwrap() <= report.critical_p);
        }
    }

    // Tests with a significant pair come first, by total significant score.
    let keys: Vec<(bool, f64)> = report
        .tests
        .iter()
        .map(|t| (t.significant_pairs > 0, t.total_significant_score))
        .collect();
    for w in keys.windows(2) {
        assert!(w[0].0 >= w[1].0);
        if w[0].0 && w[1].0 {
            assert!(w[0].1 >= w[1].1);
        }
    }
}

#[test]
fn csv_has_one_row_per_complete_pair() {
    let (_, report) = planted_report(4);
    let csv = String::from_utf8(render(&report, Format::Csv, &RenderOptions::default()).unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("category,group,words,sigma,p_value,significant"));
    assert_eq!(lines.count(), report.run.hypotheses);
}

#[test]
fn indirect_bias_recomputed_from_words_matches() {
    let (pf, report) = planted_report(5);
    let recomputed = indirect_bias_rate(&report, &pf.fixture.emb).unwrap();
    assert_eq!(recomputed.fourtuples, report.indirect_bias.fourtuples);
    assert_eq!(recomputed.positive, report.indirect_bias.positive);
}

#[test]
fn markdown_without_findings_says_so() {
    let fx = null_fixture(9, 60, 200, 10);
    let config = UbeConfig {
        n: 2,
        m: 3,
        t: 2,
        pool_size: 200,
        rotations: 19,
        alpha: 0.01,
        ..Default::default()
    };
    let report = enumerate_biases(&fx.emb, &fx.names, &config).unwrap();
    // With 19 rotations no p-value falls below 0.05, far above 0.01·k/N.
    assert_eq!(report.run.significant, 0);
    let md = String::from_utf8(render(&report, Format::Markdown, &RenderOptions::default()).unwrap()).unwrap();
    assert!(md.contains("No significant associations were found."));
    assert_eq!(report.indirect_bias.fraction_positive, None);
}

#[test]
fn masked_words_are_hidden_in_markdown_and_csv() {
    let (_, report) = planted_report(6);
    let word = report
        .tests
        .iter()
        .flat_map(|t| &t.pairs)
        .find(|p| p.significant)
        .map(|p| p.words[0].clone())
        .expect("a significant pair");
    let opts = RenderOptions {
        mask: [word.clone()].into_iter().collect(),
        ..Default::default()
    };
    for format in [Format::Markdown, Format::Csv] {
        let text = String::from_utf8(render(&report, format, &opts).unwrap()).unwrap();
        assert!(!text.contains(&word), "{format:?} still shows {word}");
    }
}

#[test]
fn null_cache_is_reused_and_checked() {
    let pf = planted_fixture(77, 2, 20, 40, 20, 80, 20);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("nulls.bin");
    let config = UbeConfig {
        n: 3,
        m: 4,
        t: 2,
        pool_size: 120,
        rotations: 200,
        ..Default::default()
    };
    let opts = RunOptions {
        null_cache: Some(cache.clone()),
        ..Default::default()
    };
    let first = run(&pf.fixture.emb, &pf.fixture.names, &config, &opts).unwrap();
    let saved = fs::read(&cache).unwrap();
    let second = run(&pf.fixture.emb, &pf.fixture.names, &config, &opts).unwrap();
    assert_eq!(first, second);
    assert_eq!(fs::read(&cache).unwrap(), saved);

    // A different seed does not match the cache, so it is recomputed and replaced.
    let other = UbeConfig { seed: 1, ..config.clone() };
    let third = run(&pf.fixture.emb, &pf.fixture.names, &other, &opts).unwrap();
    assert_ne!(fs::read(&cache).unwrap(), saved);
    let fresh = enumerate_biases(&pf.fixture.emb, &pf.fixture.names, &other).unwrap();
    assert_eq!(third, fresh);

    // Same header fields but a different t: the spot check rejects the cache.
    let longer = UbeConfig { t: 3, seed: 1, ..config.clone() };
    let fourth = run(&pf.fixture.emb, &pf.fixture.names, &longer, &opts).unwrap();
    assert_eq!(fourth, enumerate_biases(&pf.fixture.emb, &pf.fixture.names, &longer).unwrap());

    let e = Enumerator::prepare(&pf.fixture.emb, &pf.fixture.names, &config).unwrap();
    let wrong = Enumerator::prepare(&pf.fixture.emb, &pf.fixture.names, &other).unwrap().null_scores();
    assert!(e.finish(&wrong).is_err());
}

#[test]
fn ssa_counts_are_conserved() {
    let dir = tempfile::tempdir().unwrap();
    let mut female = std::collections::BTreeMap::<String, u64>::new();
    let mut total = std::collections::BTreeMap::<String, u64>::new();
    let mut r = rng(3);
    for year in 1950..1956 {
        let mut text = String::new();
        for k in 0..30 {
            let name = format!("Name{}", letters(k, 2));
            for sex in ["F", "M"] {
                let count = rand::Rng::random_range(&mut r, 1..400u64);
                text.push_str(&format!("{name},{sex},{count}\n"));
                *total.entry(name.clone()).or_default() += count;
                if sex == "F" {
                    *female.entry(name.clone()).or_default() += count;
                }
            }
        }
        fs::write(dir.path().join(format!("yob{year}.txt")), text).unwrap();
    }
    // Outside the year range.
    fs::write(dir.path().join("yob1900.txt"), "Nameaa,F,100000\n").unwrap();

    let table = ingest_ssa(dir.path(), 1950, 1955, 0).unwrap();
    let kept: u64 = table.records().iter().map(|r| r.total_count).sum();
    assert_eq!(kept, total.values().sum::<u64>());
    for rec in table.records() {
        assert_eq!(rec.total_count, total[&rec.name]);
        let f = rec.fraction_female.unwrap();
        assert!((f - female[&rec.name] as f64 / total[&rec.name] as f64).abs() < 1e-12);
        let y = rec.mean_birth_year.unwrap();
        assert!((1950.0..=1955.0).contains(&y));
    }
    let counts: Vec<u64> = table.records().iter().map(|r| r.total_count).collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
}
