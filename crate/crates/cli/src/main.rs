//! `ube-audit`: enumerate significant name/word associations in an embedding.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ube::cluster::write_assignments_csv;
use ube::embedding::{load_text_vectors, load_word2vec_binary, normalize, TextHeader, UnitEmbedding};
use ube::enumerate::{self, Enumerator, RunOptions, UbeConfig};
use ube::names::{
    clean_names, ingest_census_surnames, ingest_ssa, CleanMethod, CleaningParams, NameRecord, NameSource, NameTable,
    SurnameCase,
};
use ube::proxy::{report_fourtuples, write_fourtuples_csv};
use ube::report::{render, write_zipf_csv, zipf_plot_data, Format, RenderOptions, Similarity};
use ube::{Result, UbeError};

#[derive(Parser, Debug)]
#[command(name = "ube-audit", version, about = "Enumerate biases in a word embedding", args_override_self = true)]
struct Cli {
    /// key = value file whose keys mirror the long flag names. Flags given
    /// on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full enumeration and write a report.
    Run(RunArgs),
    /// Write per-name frequency data for a Zipf plot.
    Zipf(ZipfArgs),
    /// Ingest and clean a name list only.
    Names(NamesArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EmbeddingFormat {
    W2vBin,
    Text,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum HeaderMode {
    Auto,
    Expected,
    Absent,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum NamesKind {
    Ssa,
    Census,
    /// One name per line, optionally followed by `,count`.
    List,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CaseArg {
    Title,
    Lower,
    Upper,
    AsIs,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum CleanArg {
    Margin,
    MeanSim,
    None,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SimilarityArg {
    InnerProduct,
    Cosine,
}

#[derive(Args, Debug)]
struct EmbeddingArgs {
    #[arg(long, value_name = "PATH")]
    embedding: PathBuf,
    #[arg(long, value_enum, default_value = "w2v-bin")]
    format: EmbeddingFormat,
    /// Header handling for text vectors.
    #[arg(long, value_enum, default_value = "auto")]
    text_header: HeaderMode,
}

#[derive(Args, Debug)]
struct NameArgs {
    /// SSA directory of yobYYYY.txt files, Census CSV, or a plain list.
    #[arg(long, value_name = "PATH")]
    names: PathBuf,
    #[arg(long, value_enum, default_value = "ssa")]
    names_kind: NamesKind,
    #[arg(long, default_value_t = ube::names::SSA_YEAR_MIN)]
    year_min: i32,
    #[arg(long, default_value_t = ube::names::SSA_YEAR_MAX)]
    year_max: i32,
    #[arg(long, default_value_t = ube::names::SSA_MIN_COUNT)]
    min_count: u64,
    /// Casing applied to Census surnames.
    #[arg(long, value_enum, default_value = "title")]
    surname_case: CaseArg,
    #[arg(long, value_enum, default_value = "margin")]
    clean: CleanArg,
    #[arg(long, default_value_t = 0.2)]
    removal_fraction: f64,
    /// Negatives for the margin method come from this many frequent tokens.
    #[arg(long, default_value_t = 50_000)]
    negatives_pool: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    names: NameArgs,
    /// Number of name groups.
    #[arg(short = 'n', long = "groups", default_value_t = 12)]
    n: usize,
    /// Number of word categories.
    #[arg(short = 'm', long = "categories", default_value_t = 64)]
    m: usize,
    /// Size of the frequent lower-case word pool.
    #[arg(short = 'M', long = "pool-size", default_value_t = 30_000)]
    pool_size: usize,
    /// Words per group per test.
    #[arg(short = 't', long = "words", default_value_t = 3)]
    t: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    rotations: usize,
    #[arg(long)]
    allow_multiplicities: bool,
    /// Keep '_' as a disqualifying character in attribute words.
    #[arg(long)]
    keep_underscore: bool,
    #[arg(long, default_value_t = 300)]
    kmeans_max_iter: usize,
    #[arg(long, default_value_t = 10)]
    kmeans_n_init: usize,
    #[arg(long, default_value_t = 5)]
    illustrative: usize,
    #[arg(long, value_enum, default_value = "inner-product")]
    similarity: SimilarityArg,

    #[arg(long, value_name = "PATH", default_value = "report.json")]
    out: PathBuf,
    #[arg(long, value_name = "PATH")]
    markdown: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    null_cache: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    fourtuples: Option<PathBuf>,
    /// Write token,cluster_id rows for the name clustering.
    #[arg(long, value_name = "PATH")]
    name_clusters: Option<PathBuf>,
    /// Write token,cluster_id rows for the word clustering.
    #[arg(long, value_name = "PATH")]
    word_clusters: Option<PathBuf>,
    /// Words listed one per line in this file are masked in Markdown and CSV.
    #[arg(long, value_name = "PATH")]
    mask: Option<PathBuf>,
    #[arg(long)]
    no_banner: bool,
    /// Store elapsed time in the JSON report.
    #[arg(long)]
    record_wall_time: bool,
}

#[derive(Args, Debug)]
struct ZipfArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    names: NameArgs,
    #[arg(long, value_name = "PATH", default_value = "zipf.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NamesArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    names: NameArgs,
    /// Kept names as CSV.
    #[arg(long, value_name = "PATH", default_value = "names.csv")]
    out: PathBuf,
    /// Removed names, one per line.
    #[arg(long, value_name = "PATH")]
    removed: Option<PathBuf>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    let args = match with_config_file(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Zipf(a) => zipf(a),
        Command::Names(a) => names(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &UbeError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn exit_code(e: &UbeError) -> u8 {
    match e.root() {
        UbeError::Config(_) => 2,
        UbeError::Format { .. } | UbeError::TruncatedFile { .. } | UbeError::UnknownToken(_) | UbeError::Ingest(_) => 3,
        _ => 4,
    }
}

/// Splice `--key value` pairs from the config file in front of the user's
/// flags, right after the subcommand, so explicit flags win.
fn with_config_file(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config");
    let path = match pos {
        Some(p) => args
            .get(p + 1)
            .map(PathBuf::from)
            .ok_or_else(|| UbeError::Config("--config needs a file".into()))?,
        None => match args.iter().find_map(|a| a.to_str()?.strip_prefix("--config=").map(PathBuf::from)) {
            Some(p) => p,
            None => return Ok(args),
        },
    };
    let text = fs::read_to_string(&path).map_err(|e| UbeError::Config(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| UbeError::Config(format!("{}: {e}", path.display())))?;
    let mut extra = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => extra.push(OsString::from(flag)),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => {
                extra.push(flag.into());
                extra.push(s.into());
            }
            toml::Value::Integer(_) | toml::Value::Float(_) => {
                extra.push(flag.into());
                extra.push(value.to_string().into());
            }
            other => return Err(UbeError::Config(format!("unsupported value for {key}: {other}"))),
        }
    }
    let sub = args
        .iter()
        .position(|a| a == "run" || a == "zipf" || a == "names")
        .ok_or_else(|| UbeError::Config("a subcommand is required".into()))?;
    let mut out: Vec<OsString> = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn load_embedding(a: &EmbeddingArgs) -> Result<UnitEmbedding> {
    let raw = match a.format {
        EmbeddingFormat::W2vBin => load_word2vec_binary(&a.embedding)?,
        EmbeddingFormat::Text => {
            let header = match a.text_header {
                HeaderMode::Auto => TextHeader::default(),
                HeaderMode::Expected => TextHeader::Expected,
                HeaderMode::Absent => TextHeader::Absent,
            };
            load_text_vectors(&a.embedding, header)?
        }
    };
    Ok(normalize(raw))
}

fn load_names(a: &NameArgs) -> Result<NameTable> {
    match a.names_kind {
        NamesKind::Ssa => ingest_ssa(&a.names, a.year_min, a.year_max, a.min_count),
        NamesKind::Census => {
            let case = match a.surname_case {
                CaseArg::Title => SurnameCase::Title,
                CaseArg::Lower => SurnameCase::Lower,
                CaseArg::Upper => SurnameCase::Upper,
                CaseArg::AsIs => SurnameCase::AsIs,
            };
            ingest_census_surnames(&a.names, a.min_count, case)
        }
        NamesKind::List => read_name_list(&a.names),
    }
}

fn read_name_list(path: &Path) -> Result<NameTable> {
    let text = fs::read_to_string(path).map_err(|e| UbeError::Ingest(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, count) = match line.split_once(',') {
            Some((n, c)) => {
                let c = c.trim().parse().map_err(|_| UbeError::Format {
                    line: Some(k + 1),
                    message: format!("bad count {c:?}"),
                })?;
                (n.trim(), c)
            }
            None => (line, 1),
        };
        records.push(NameRecord::bare(name, count));
    }
    NameTable::new(records, NameSource::Custom)
}

fn prepare_names(a: &NameArgs, emb: &UnitEmbedding) -> Result<(NameTable, NameTable, Vec<String>)> {
    let table = load_names(a)?;
    let method = match a.clean {
        CleanArg::Margin => CleanMethod::Margin,
        CleanArg::MeanSim => CleanMethod::MeanSimilarity,
        CleanArg::None => {
            let (present, _) = table.in_vocabulary(emb);
            return Ok((table, present, Vec::new()));
        }
    };
    let params = CleaningParams {
        removal_fraction: a.removal_fraction,
        method,
        negatives_pool: a.negatives_pool,
        seed: a.seed,
        ..Default::default()
    };
    let cleaned = clean_names(&table, emb, params)?;
    Ok((table, cleaned.kept, cleaned.removed))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let config = UbeConfig {
        n: a.n,
        m: a.m,
        pool_size: a.pool_size,
        t: a.t,
        alpha: a.alpha,
        rotations: a.rotations,
        seed: a.names.seed,
        allow_multiplicities: a.allow_multiplicities,
        underscore_as_space: !a.keep_underscore,
        kmeans_max_iter: a.kmeans_max_iter,
        kmeans_n_init: a.kmeans_n_init,
        illustrative_k: a.illustrative,
        illustrative_similarity: match a.similarity {
            SimilarityArg::InnerProduct => Similarity::InnerProduct,
            SimilarityArg::Cosine => Similarity::Cosine,
        },
        clean_method: match a.names.clean {
            CleanArg::Margin => Some(CleanMethod::Margin),
            CleanArg::MeanSim => Some(CleanMethod::MeanSimilarity),
            CleanArg::None => None,
        },
        removal_fraction: (a.names.clean != CleanArg::None).then_some(a.names.removal_fraction),
    };
    config.validate()?;
    let emb = load_embedding(&a.embedding)?;
    let (_, names, _) = prepare_names(&a.names, &emb)?;

    let started = Instant::now();
    let prepared = Enumerator::prepare(&emb, &names, &config)?.with_fingerprint(emb.fingerprint());
    if let Some(p) = &a.name_clusters {
        let tokens: Vec<String> = prepared.names().names().map(str::to_string).collect();
        write_assignments_csv(&tokens, prepared.name_clustering(), create(p)?)?;
    }
    if let Some(p) = &a.word_clusters {
        write_assignments_csv(&prepared.pool().words, prepared.word_clustering(), create(p)?)?;
    }
    let options = RunOptions {
        null_cache: a.null_cache.clone(),
        record_wall_time: a.record_wall_time,
    };
    let report = enumerate::run_prepared(&prepared, &options, started)?;

    write_bytes(&a.out, &render(&report, Format::Json, &RenderOptions::default())?)?;
    let mut render_options = RenderOptions {
        warning_banner: !a.no_banner,
        ..Default::default()
    };
    if let Some(p) = &a.mask {
        let text = fs::read_to_string(p)?;
        render_options.mask = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect();
    }
    if let Some(p) = &a.markdown {
        write_bytes(p, &render(&report, Format::Markdown, &render_options)?)?;
    }
    if let Some(p) = &a.csv {
        write_bytes(p, &render(&report, Format::Csv, &render_options)?)?;
    }
    if let Some(p) = &a.fourtuples {
        write_fourtuples_csv(&report_fourtuples(&report, &emb)?, create(p)?)?;
    }
    tracing::info!(
        significant = report.run.significant,
        hypotheses = report.run.hypotheses,
        critical_p = report.critical_p,
        "report written to {}",
        a.out.display()
    );
    Ok(())
}

fn zipf(a: ZipfArgs) -> Result<()> {
    let emb = load_embedding(&a.embedding)?;
    let (table, _, removed) = prepare_names(&a.names, &emb)?;
    let removed: HashSet<String> = removed.into_iter().collect();
    let rows = zipf_plot_data(&table, &emb, &removed);
    write_zipf_csv(&rows, create(&a.out)?)
}

fn names(a: NamesArgs) -> Result<()> {
    let emb = load_embedding(&a.embedding)?;
    let (_, kept, removed) = prepare_names(&a.names, &emb)?;
    let mut w = create(&a.out)?;
    writeln!(w, "name,total_count,fraction_female,mean_birth_year")?;
    for r in kept.records() {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", r.name, r.total_count, opt(r.fraction_female), opt(r.mean_birth_year))?;
    }
    w.flush()?;
    if let Some(p) = &a.removed {
        let mut w = create(p)?;
        for name in &removed {
            writeln!(w, "{name}")?;
        }
        w.flush()?;
    }
    tracing::info!(kept = kept.len(), removed = removed.len(), "names written to {}", a.out.display());
    Ok(())
}
