use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tempfile::TempDir;
use ube::report::AuditReport;

const DIM: usize = 8;
const WORDS: usize = 160;
const NAMES: usize = 48;

fn word(k: usize) -> String {
    let a = (b'a' + (k / 26) as u8) as char;
    let b = (b'a' + (k % 26) as u8) as char;
    format!("w{a}{b}")
}

fn name(k: usize) -> String {
    let a = (b'a' + (k / 26) as u8) as char;
    let b = (b'a' + (k % 26) as u8) as char;
    format!("Nam{a}{b}")
}

/// Text vectors with a header: words first, then names, coordinates uniform
/// in [-1, 1).
fn write_embedding(dir: &Path) -> PathBuf {
    let mut rng = StdRng::seed_from_u64(7);
    let mut text = format!("{} {DIM}\n", WORDS + NAMES);
    let tokens = (0..WORDS).map(word).chain((0..NAMES).map(name));
    for t in tokens {
        text.push_str(&t);
        for _ in 0..DIM {
            text.push_str(&format!(" {:.6}", rng.random_range(-1.0..1.0)));
        }
        text.push('\n');
    }
    let path = dir.join("vectors.txt");
    fs::write(&path, text).unwrap();
    path
}

fn write_name_list(dir: &Path) -> PathBuf {
    let text: String = (0..NAMES).map(|k| format!("{},{}\n", name(k), 1000 - k)).collect();
    let path = dir.join("names.txt");
    fs::write(&path, text).unwrap();
    path
}

fn write_ssa(dir: &Path) -> PathBuf {
    let ssa = dir.join("ssa");
    fs::create_dir(&ssa).unwrap();
    for year in [1990, 1991] {
        let mut text = String::new();
        for k in 0..NAMES {
            text.push_str(&format!("{},F,{}\n", name(k), 600 + 10 * k));
            text.push_str(&format!("{},M,{}\n", name(k), 900 - 10 * k));
        }
        text.push_str("Missing,F,5000\n");
        fs::write(ssa.join(format!("yob{year}.txt")), text).unwrap();
    }
    ssa
}

struct Fixture {
    dir: TempDir,
    embedding: PathBuf,
    names: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let embedding = write_embedding(dir.path());
        let names = write_name_list(dir.path());
        Fixture { dir, embedding, names }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.path().join(file)
    }

    /// A small `run` invocation writing `out`.
    fn run_args(&self, out: &str) -> Vec<String> {
        [
            "run",
            "--embedding",
            self.embedding.to_str().unwrap(),
            "--format",
            "text",
            "--names",
            self.names.to_str().unwrap(),
            "--names-kind",
            "list",
            "--clean",
            "none",
            "--groups",
            "3",
            "--categories",
            "4",
            "--pool-size",
            "150",
            "--words",
            "2",
            "--rotations",
            "99",
            "--seed",
            "5",
            "--out",
            self.path(out).to_str().unwrap(),
        ]
        .map(String::from)
        .to_vec()
    }
}

fn ube(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ube-audit"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn load(path: &Path) -> AuditReport {
    AuditReport::from_json(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn run_writes_every_output() {
    let fx = Fixture::new();
    let mut args = fx.run_args("report.json");
    for (flag, file) in [
        ("--markdown", "report.md"),
        ("--csv", "pairs.csv"),
        ("--fourtuples", "tuples.csv"),
        ("--name-clusters", "names.csv"),
        ("--word-clusters", "words.csv"),
        ("--null-cache", "nulls.bin"),
    ] {
        args.push(flag.into());
        args.push(fx.path(file).to_str().unwrap().into());
    }
    let out = ube(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let report = load(&fx.path("report.json"));
    assert_eq!((report.config.n, report.config.m, report.config.t), (3, 4, 2));
    assert_eq!(report.groups.len(), 3);
    assert_eq!(report.run.names_used, NAMES);

    let csv = fs::read_to_string(fx.path("pairs.csv")).unwrap();
    assert_eq!(csv.lines().count(), report.run.hypotheses + 1);
    let md = fs::read_to_string(fx.path("report.md")).unwrap();
    assert!(md.starts_with('#'));
    assert_eq!(fs::read_to_string(fx.path("names.csv")).unwrap().lines().count(), NAMES + 1);
    assert_eq!(fs::read_to_string(fx.path("words.csv")).unwrap().lines().count(), 151);
    assert!(fx.path("tuples.csv").exists());
    assert!(fx.path("nulls.bin").exists());
}

#[test]
fn runs_are_reproducible_and_cache_is_reused() {
    let fx = Fixture::new();
    let cache = fx.path("nulls.bin").to_str().unwrap().to_string();
    let mut first = fx.run_args("a.json");
    first.extend(["--null-cache".into(), cache.clone()]);
    let mut second = fx.run_args("b.json");
    second.extend(["--null-cache".into(), cache]);
    assert_eq!(code(&ube(&first)), 0);
    assert_eq!(code(&ube(&second)), 0);
    assert_eq!(fs::read(fx.path("a.json")).unwrap(), fs::read(fx.path("b.json")).unwrap());
    assert_eq!(code(&ube(&fx.run_args("c.json"))), 0);
    assert_eq!(fs::read(fx.path("a.json")).unwrap(), fs::read(fx.path("c.json")).unwrap());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let fx = Fixture::new();
    let config = fx.path("ube.toml");
    fs::write(&config, "groups = 2\nrotations = 49\nallow_multiplicities = true\n").unwrap();
    let mut args = fx.run_args("report.json");
    args.retain(|a| a != "--rotations" && a != "99");
    args.extend(["--config".into(), config.to_str().unwrap().into()]);
    let out = ube(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = load(&fx.path("report.json"));
    // --groups 3 on the command line beats the file.
    assert_eq!(report.config.n, 3);
    assert_eq!(report.config.rotations, 49);
    assert!(report.config.allow_multiplicities);
}

#[test]
fn configuration_errors_exit_2() {
    let fx = Fixture::new();
    let mut args = fx.run_args("report.json");
    args.extend(["--alpha".into(), "1.5".into()]);
    assert_eq!(code(&ube(&args)), 2);

    let mut args = fx.run_args("report.json");
    args.extend(["--config".into(), fx.path("absent.toml").to_str().unwrap().into()]);
    assert_eq!(code(&ube(&args)), 2);

    let mut args = fx.run_args("report.json");
    args.push("--no-such-flag".into());
    assert_eq!(code(&ube(&args)), 2);

    let mut args = fx.run_args("report.json");
    args.extend(["--removal-fraction".into(), "1.0".into(), "--clean".into(), "margin".into()]);
    assert_eq!(code(&ube(&args)), 2);
    assert!(!fx.path("report.json").exists());
}

#[test]
fn malformed_inputs_exit_3() {
    let fx = Fixture::new();
    let bad = fx.path("bad.txt");
    fs::write(&bad, "3 4\nalpha 0.1 0.2 0.3 0.4\nbeta 0.1 0.2\n").unwrap();
    let mut args = fx.run_args("report.json");
    let at = args.iter().position(|a| a == "--embedding").unwrap() + 1;
    args[at] = bad.to_str().unwrap().into();
    assert_eq!(code(&ube(&args)), 3);

    let names = fx.path("bad_names.txt");
    fs::write(&names, "Nameaa,lots\n").unwrap();
    let mut args = fx.run_args("report.json");
    let at = args.iter().position(|a| a == "--names").unwrap() + 1;
    args[at] = names.to_str().unwrap().into();
    assert_eq!(code(&ube(&args)), 3);
}

#[test]
fn other_failures_exit_4() {
    let fx = Fixture::new();
    let mut args = fx.run_args("report.json");
    let at = args.iter().position(|a| a == "--embedding").unwrap() + 1;
    args[at] = fx.path("missing.txt").to_str().unwrap().into();
    assert_eq!(code(&ube(&args)), 4);
}

#[test]
fn names_and_zipf_subcommands() {
    let fx = Fixture::new();
    let ssa = write_ssa(fx.dir.path());
    let common = |sub: &str, out: &str| -> Vec<String> {
        [
            sub,
            "--embedding",
            fx.embedding.to_str().unwrap(),
            "--format",
            "text",
            "--names",
            ssa.to_str().unwrap(),
            "--year-min",
            "1990",
            "--year-max",
            "1995",
            "--min-count",
            "100",
            "--removal-fraction",
            "0.25",
            "--out",
            fx.path(out).to_str().unwrap(),
        ]
        .map(String::from)
        .to_vec()
    };

    let mut args = common("names", "kept.csv");
    args.extend(["--removed".into(), fx.path("removed.txt").to_str().unwrap().into()]);
    let out = ube(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let kept = fs::read_to_string(fx.path("kept.csv")).unwrap();
    let removed = fs::read_to_string(fx.path("removed.txt")).unwrap();
    assert_eq!(kept.lines().next(), Some("name,total_count,fraction_female,mean_birth_year"));
    assert_eq!(removed.lines().count(), NAMES / 4);
    assert_eq!(kept.lines().count() - 1, NAMES - NAMES / 4);
    assert!(!kept.contains("Missing"));
    // Name k: 600 + 10k female and 900 - 10k male births in each of two years.
    for row in kept.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        let k = (0..NAMES).find(|&k| name(k) == f[0]).expect("known name");
        assert_eq!(f[1], "3000");
        let female: f64 = f[2].parse().unwrap();
        assert!((female - (600 + 10 * k) as f64 / 1500.0).abs() < 1e-12, "{row}");
        assert_eq!(f[3], "1990.5");
    }

    let out = ube(&common("zipf", "zipf.csv"));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let zipf = fs::read_to_string(fx.path("zipf.csv")).unwrap();
    assert_eq!(zipf.lines().next(), Some("name,rank_index,log_probability,kept"));
    // Every ingested name, including the one missing from the vectors.
    assert_eq!(zipf.lines().count(), NAMES + 2);
    assert_eq!(zipf.lines().filter(|l| l.ends_with(",true")).count(), NAMES - NAMES / 4);
}
