//! `tokeq`: command-line front end for tokeq-core.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr. Exit codes:
//! 0 success, 2 invalid arguments, 3 I/O or parse errors, 4 misaligned corpus.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use tokeq_core::parity::{report_from_json, report_from_tsv, report_to_json, report_to_pretty, report_to_tsv};
use tokeq_core::{
    ablate, apply_unk_filter, bpe_train, context_capacity, corpus_premiums, cost_table, fair_merge, latency_table,
    load_documents, load_model, load_parallel_with, save_model, train_monolingual_all, Aggregation, BoundaryMode,
    ByteTokenizer, CodepointTokenizer, Error, FairTokenizer, LanguageCode, LoadOptions, ParallelCorpus, PremiumReport,
    PricingKind, PricingScheme, Reference, Tokenizer, BYTE_BASE, DEFAULT_UNK_THRESHOLD,
};

#[derive(Parser)]
#[command(
    name = "tokeq",
    version,
    about = "Measure and reduce tokenization premiums across languages"
)]
struct Cli {
    /// Worker threads; 0 uses all cores. Never changes output.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a byte-level BPE model.
    Train(TrainArgs),
    /// Encode text line by line.
    Encode(EncodeArgs),
    /// Token totals and premiums over a parallel corpus.
    Parity(ParityArgs),
    /// Build a shared vocabulary by greedy fair merging.
    Merge(MergeArgs),
    /// Sequence length as a function of the merge-list prefix kept.
    Ablate(AblateArgs),
    /// Cost, context and latency consequences of a parity report.
    Cost(CostArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Text file, or directory of .txt files.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab_size: usize,
    #[arg(long, default_value = "whitespace")]
    boundary: BoundaryMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    /// byte | codepoint | bpe:<dir> | fair:<dir>
    #[arg(long)]
    tokenizer: Selector,
    /// Input file; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EncodeFormat::Ids)]
    format: EncodeFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ParityArgs {
    /// Corpus directory or manifest file.
    #[arg(long)]
    corpus_dir: PathBuf,
    #[arg(long)]
    pivot: String,
    /// byte | codepoint | bpe:<dir> | fair:<dir>
    #[arg(long)]
    tokenizer: Selector,
    #[arg(long, default_value = "total")]
    aggregation: Aggregation,
    #[arg(long, default_value_t = DEFAULT_UNK_THRESHOLD)]
    unk_threshold: f64,
    /// Normalize sentences to NFC before tokenizing.
    #[arg(long)]
    nfc: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    format: ReportFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(long)]
    corpus_dir: PathBuf,
    #[arg(long)]
    per_lang_vocab: usize,
    #[arg(long)]
    target_vocab: usize,
    /// auto, or a language code.
    #[arg(long, default_value = "auto")]
    reference: Reference,
    #[arg(long, default_value = "whitespace")]
    boundary: BoundaryMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Text file, or directory of .txt files.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    fractions: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DataFormat::Tsv)]
    format: DataFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Report written by `parity` (TSV or JSON).
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    pricing: PricingKind,
    #[arg(long)]
    unit_price: f64,
    /// Context window in tokens.
    #[arg(long)]
    window: Option<u64>,
    #[arg(long)]
    seconds_per_token: Option<f64>,
    /// Pivot of a TSV report; inferred when absent.
    #[arg(long)]
    pivot: Option<String>,
    #[arg(long, value_enum, default_value_t = DataFormat::Tsv)]
    format: DataFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodeFormat {
    Ids,
    Count,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Tsv,
    Json,
    Pretty,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataFormat {
    Tsv,
    Json,
}

#[derive(Clone)]
enum Selector {
    Byte,
    Codepoint,
    Bpe(PathBuf),
    Fair(PathBuf),
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "byte" => Ok(Selector::Byte),
            None if s == "codepoint" => Ok(Selector::Codepoint),
            Some(("bpe", dir)) if !dir.is_empty() => Ok(Selector::Bpe(dir.into())),
            Some(("fair", dir)) if !dir.is_empty() => Ok(Selector::Fair(dir.into())),
            _ => Err(format!(
                "unknown tokenizer {s:?}; expected byte, codepoint, bpe:<dir> or fair:<dir>"
            )),
        }
    }
}

impl Selector {
    fn load(&self) -> tokeq_core::Result<Box<dyn Tokenizer>> {
        Ok(match self {
            Selector::Byte => Box::new(ByteTokenizer),
            Selector::Codepoint => Box::new(CodepointTokenizer),
            Selector::Bpe(dir) => Box::new(load_model(dir)?),
            Selector::Fair(dir) => Box::new(FairTokenizer::load(dir)?),
        })
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Alignment { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TOKEQ_LOG", "warn")).init();

    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("tokeq: cannot start {} workers: {e}", cli.jobs);
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Encode(a) => encode(a),
        Command::Parity(a) => parity(a),
        Command::Merge(a) => merge(a),
        Command::Ablate(a) => ablation(a),
        Command::Cost(a) => cost(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tokeq: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> tokeq_core::Result<()> {
    let io_err = |path: &Path, e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    match output {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn train(a: TrainArgs) -> tokeq_core::Result<()> {
    if a.vocab_size < BYTE_BASE {
        return Err(invalid(format!(
            "--vocab-size {} is below the {BYTE_BASE} byte tokens every model starts with",
            a.vocab_size
        )));
    }
    let docs = load_documents(&a.corpus)?;
    let model = bpe_train(&docs, a.vocab_size, a.boundary)?;
    save_model(&model, &a.out)?;
    eprintln!("merges: {}", model.merges().len());
    eprintln!("vocab size: {}", model.vocab().len());
    Ok(())
}

fn encode(a: EncodeArgs) -> tokeq_core::Result<()> {
    let tokenizer = a.tokenizer.load()?;
    let text = match &a.input {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            String::from_utf8(bytes).map_err(|e| Error::Encoding {
                path: path.clone(),
                offset: e.utf8_error().valid_up_to(),
            })?
        }
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| Error::Io {
                path: "<stdin>".into(),
                source: e,
            })?;
            s
        }
    };
    let mut out = String::new();
    for line in text.lines() {
        let enc = tokenizer.encode(line);
        match a.format {
            EncodeFormat::Ids => {
                let ids: Vec<String> = enc.ids.iter().map(u32::to_string).collect();
                out.push_str(&ids.join(" "));
            }
            EncodeFormat::Count => out.push_str(&enc.len().to_string()),
        }
        out.push('\n');
    }
    emit(a.output.as_deref(), &out)
}

fn load_corpus(path: &Path, nfc: bool) -> tokeq_core::Result<ParallelCorpus> {
    load_parallel_with(path, LoadOptions { nfc })
}

fn parity(a: ParityArgs) -> tokeq_core::Result<()> {
    if !(0.0..=1.0).contains(&a.unk_threshold) {
        return Err(invalid(format!(
            "--unk-threshold {} is outside [0, 1]",
            a.unk_threshold
        )));
    }
    let tokenizer = a.tokenizer.load()?;
    let corpus = load_corpus(&a.corpus_dir, a.nfc)?;
    if !corpus.contains(&a.pivot) {
        let codes: Vec<&str> = corpus.languages().map(LanguageCode::as_str).collect();
        return Err(invalid(format!(
            "pivot {} is not in the corpus ({})",
            a.pivot,
            codes.join(", ")
        )));
    }
    let report = corpus_premiums(tokenizer.as_ref(), &corpus, &a.pivot, a.aggregation)?;
    let report = apply_unk_filter(report, a.unk_threshold)?;
    let text = match a.format {
        ReportFormat::Tsv => report_to_tsv(&report),
        ReportFormat::Json => report_to_json(&report),
        ReportFormat::Pretty => report_to_pretty(&report),
    };
    emit(a.output.as_deref(), &text)
}

fn merge(a: MergeArgs) -> tokeq_core::Result<()> {
    if a.per_lang_vocab < BYTE_BASE || a.target_vocab < BYTE_BASE {
        return Err(invalid(format!("vocabulary sizes must be at least {BYTE_BASE}")));
    }
    let corpus = load_corpus(&a.corpus_dir, false)?;
    if let Reference::Language(code) = &a.reference {
        if !corpus.contains(code.as_str()) {
            return Err(invalid(format!("reference {code} is not in the corpus")));
        }
    }
    let models = train_monolingual_all(&corpus, a.per_lang_vocab, a.boundary)?;
    let (tokenizer, state) = fair_merge(&corpus, &models, a.target_vocab, a.reference)?;
    tokenizer.save(&a.out)?;
    if tokenizer.vocab().len() < a.target_vocab {
        log::warn!(
            "candidate queues ran out at {} tokens, short of {}",
            tokenizer.vocab().len(),
            a.target_vocab
        );
    }
    eprintln!("vocab size: {}", tokenizer.vocab().len());
    for (code, p) in &state.premiums {
        eprintln!("{code}\t{p:.2}");
    }
    eprintln!("max premium: {:.2}", state.max_premium());
    Ok(())
}

fn ablation(a: AblateArgs) -> tokeq_core::Result<()> {
    let model = load_model(&a.model)?;
    let docs = load_documents(&a.corpus)?;
    let curve = ablate(&model, &docs, &a.fractions)?;
    let text = match a.format {
        DataFormat::Tsv => curve.to_tsv(),
        DataFormat::Json => pretty_json(&serde_json::to_value(&curve).expect("curve serializes")),
    };
    emit(a.output.as_deref(), &text)
}

fn pretty_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn read_report(path: &Path, pivot: Option<&str>) -> tokeq_core::Result<PremiumReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let report = if text.trim_start().starts_with('{') {
        report_from_json(&text, path)?
    } else {
        report_from_tsv(&text, path, pivot)?
    };
    if let Some(p) = pivot {
        if report.pivot.as_str() != p {
            return Err(invalid(format!(
                "--pivot {p} does not match the report pivot {}",
                report.pivot
            )));
        }
    }
    Ok(report)
}

fn cost(a: CostArgs) -> tokeq_core::Result<()> {
    let pricing = PricingScheme::new(a.pricing, a.unit_price)?;
    let report = read_report(&a.report, a.pivot.as_deref())?;
    let chars: BTreeMap<LanguageCode, u64> = report.rows.iter().map(|(c, r)| (c.clone(), r.codepoints)).collect();
    if a.pricing == PricingKind::PerCharacter && chars.values().all(|&n| n == 0) {
        return Err(invalid(
            "per-char pricing needs codepoint counts, which only JSON reports carry",
        ));
    }
    let costs = cost_table(&report, pricing, Some(&chars))?;
    let context = a.window.map(|w| context_capacity(&report, w)).transpose()?;
    let latency = a.seconds_per_token.map(|s| latency_table(&report, s)).transpose()?;

    let text = match a.format {
        DataFormat::Tsv => {
            let mut out = String::from("language\tunits\tcost\tcost_premium");
            if context.is_some() {
                out.push_str("\teffective_context");
            }
            if latency.is_some() {
                out.push_str("\tlatency_seconds");
            }
            out.push('\n');
            for (code, row) in &costs {
                out.push_str(&format!(
                    "{code}\t{}\t{:.6}\t{:.4}",
                    row.units, row.cost, row.cost_premium
                ));
                if let Some(ctx) = &context {
                    match ctx.get(code) {
                        Some(v) => out.push_str(&format!("\t{v:.4}")),
                        None => out.push_str("\t-"),
                    }
                }
                if let Some(lat) = &latency {
                    out.push_str(&format!("\t{:.4}", lat[code]));
                }
                out.push('\n');
            }
            out
        }
        DataFormat::Json => {
            let mut rows = Map::new();
            for (code, row) in &costs {
                let mut r = json!({
                    "units": row.units,
                    "cost": row.cost,
                    "cost_premium": row.cost_premium,
                });
                if let Some(ctx) = &context {
                    r["effective_context"] = ctx.get(code).map_or(Value::Null, |&v| json!(v));
                }
                if let Some(lat) = &latency {
                    r["latency_seconds"] = json!(lat[code]);
                }
                rows.insert(code.to_string(), r);
            }
            pretty_json(&json!({
                "pivot": report.pivot.as_str(),
                "pricing": a.pricing.to_string(),
                "unit_price": a.unit_price,
                "window": a.window,
                "seconds_per_token": a.seconds_per_token,
                "rows": rows,
            }))
        }
    };
    emit(a.output.as_deref(), &text)
}
