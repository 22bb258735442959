use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rust_decimal::Decimal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use informalize::config::{resolve, FileConfig};
use informalize::dataset::{self, assemble, AssembleOptions, CorpusStats, Method, PairRecord, PairStream};
use informalize::manifest::RunManifest;
use informalize::otf::{self, IdentityTranslator, LoopConfig, ToyCipherTranslator, TranslatorPort};
use informalize::parser::{extract_theorems_with, keyword_counts, ExtractOptions, TheoremRecord};
use informalize::prompt::{default_shots, PromptMode, PromptSpec, Shot};
use informalize::proofstate::{align_tactics_to_lines, load_states};
use informalize::rules::{informalize_proof, TemplateTable};
use informalize::teacher::{DiskCache, HttpTransport, ItemError, TeacherClient, TeacherConfig, TeacherError};
use informalize::tokenizer::Tokenizer;

const BUNDLED_OTF_CORPUS: &str = include_str!("../fixtures/otf_corpus.txt");

#[derive(Parser)]
#[command(name = "informalize", version, about = "Mine Lean corpora into formal/informal training pairs")]
struct Cli {
    /// TOML config file; CLI flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest (defaults next to the main output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// BPE vocabulary (token to id JSON); requires --merges.
    #[arg(long, global = true, requires = "merges")]
    vocab: Option<PathBuf>,
    /// BPE merges file; requires --vocab.
    #[arg(long, global = true, requires = "vocab")]
    merges: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract theorem, lemma and def declarations from a directory of .lean files.
    Extract(ExtractArgs),
    /// Informalize extracted proofs with the tactic templates.
    RuleInformalize(RuleArgs),
    /// Informalize proofs or proof-state tuples with a teacher model.
    Distill(DistillArgs),
    /// Align informal proofs onto proof-state tactics.
    Align(AlignArgs),
    /// Merge pair files into one deduplicated, token-counted corpus.
    Assemble(AssembleArgs),
    /// Token-count report for a corpus.
    Stats(StatsArgs),
    /// Split a corpus into train/val/test by source.
    Split(SplitArgs),
    /// Run the on-the-fly backtranslation loop with a built-in translator.
    OtfSim(OtfArgs),
}

#[derive(clap::Args)]
struct ExtractArgs {
    #[arg(long)]
    input_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fail when any file cannot be read.
    #[arg(long)]
    strict: bool,
    /// Transliterate extracted text to ASCII.
    #[arg(long)]
    ascii_fold: bool,
    /// Write parser warnings as JSON Lines.
    #[arg(long)]
    warnings: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RuleArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Template overrides (TOML, or JSON by extension).
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DistillMode {
    Full,
    Tactic,
}

#[derive(clap::Args)]
struct DistillArgs {
    /// Theorem JSONL (full mode) or proof-state JSONL (tactic mode).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<DistillMode>,
    /// Shot pairs as a JSON array of [formal, informal] arrays.
    #[arg(long)]
    shots: Option<PathBuf>,
    #[arg(long)]
    teacher_config: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Stop sending requests once this spend would be exceeded; 0 replays the cache only.
    #[arg(long, value_parser = parse_decimal)]
    budget: Option<Decimal>,
    /// Theorem JSONL supplying statements for tactic mode.
    #[arg(long)]
    theorems: Option<PathBuf>,
    /// File of theorem ids to process, one per line.
    #[arg(long)]
    allowlist: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    max_parallel: Option<usize>,
    /// Ledger JSON output (defaults to <out>.ledger.json).
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Failed prompts (defaults to <out>.quarantine.jsonl).
    #[arg(long)]
    quarantine: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AlignArgs {
    #[arg(long)]
    states: PathBuf,
    /// JSONL of {"theorem_id", "informal_proof"}.
    #[arg(long)]
    informal: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the aligned tactics as pair records.
    #[arg(long)]
    pairs: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AssembleArgs {
    /// Pair file, optionally tagged as METHOD=PATH to override record methods.
    #[arg(long = "input", required = true)]
    inputs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    quarantine: Option<PathBuf>,
    #[arg(long)]
    stats_json: Option<PathBuf>,
    #[arg(long)]
    drop_low_quality: bool,
}

#[derive(clap::Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Markdown table output; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SplitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated train,val,test ratios.
    #[arg(long, value_parser = parse_ratios)]
    ratios: Option<[f64; 3]>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TranslatorKind {
    Toy,
    Identity,
}

#[derive(clap::Args)]
struct OtfArgs {
    /// One formal sentence per line; the bundled synthetic corpus by default.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "toy")]
    translator: TranslatorKind,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    plateau_window: Option<usize>,
    #[arg(long)]
    plateau_epsilon: Option<f64>,
    /// Loss curve output: SVG when the extension is .svg, CSV otherwise.
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn parse_decimal(s: &str) -> Result<Decimal, String> {
    let d = Decimal::from_str(s).map_err(|e| e.to_string())?;
    if d.is_sign_negative() {
        return Err("must be non-negative".into());
    }
    Ok(d)
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let ratios: [f64; 3] = parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 ratios, got {}", v.len()))?;
    dataset::split(&[], ratios, 0).map_err(|e| e.to_string())?;
    Ok(ratios)
}

/// Failure classes with stable exit codes.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Teacher(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Teacher(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Data(e) | Failure::Teacher(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

struct Ctx {
    file: FileConfig,
    manifest: Option<PathBuf>,
    vocab: Option<PathBuf>,
    merges: Option<PathBuf>,
    args: Vec<String>,
}

impl Ctx {
    fn tokenizer(&self) -> Result<(Arc<Tokenizer>, serde_json::Value), Failure> {
        let vocab = self.vocab.clone().or_else(|| self.file.tokenizer.vocab.clone());
        let merges = self.merges.clone().or_else(|| self.file.tokenizer.merges.clone());
        match (vocab, merges) {
            (Some(v), Some(m)) => {
                let t = Tokenizer::from_files(&v, &m).context("loading tokenizer")?;
                let desc = serde_json::json!({ "vocab": v, "merges": m });
                Ok((Arc::new(t), desc))
            }
            (None, None) => Ok((Arc::new(Tokenizer::reference().clone()), serde_json::json!("bundled reference"))),
            _ => Err(Failure::Usage(anyhow!("tokenizer needs both vocab and merges"))),
        }
    }

    fn start(&self, command: &str, config: serde_json::Value) -> RunManifest {
        RunManifest::start(command, self.args.clone(), config)
    }

    fn finish(&self, manifest: RunManifest, default_path: PathBuf) -> Outcome {
        let path = self.manifest.clone().unwrap_or(default_path);
        manifest
            .finish(&path)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

fn run(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(|e| Failure::Usage(e.into()))?,
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        file,
        manifest: cli.manifest,
        vocab: cli.vocab,
        merges: cli.merges,
        args: std::env::args().collect(),
    };
    match cli.command {
        Command::Extract(a) => cmd_extract(&ctx, a),
        Command::RuleInformalize(a) => cmd_rules(&ctx, a),
        Command::Distill(a) => cmd_distill(&ctx, a),
        Command::Align(a) => cmd_align(&ctx, a),
        Command::Assemble(a) => cmd_assemble(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::Split(a) => cmd_split(&ctx, a),
        Command::OtfSim(a) => cmd_otf(&ctx, a),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Write through a temp file in the destination directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    write_atomic(path, &buf)
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn read_allowlist(path: &Path) -> anyhow::Result<BTreeSet<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn cmd_extract(ctx: &Ctx, a: ExtractArgs) -> Outcome {
    let ascii_fold = resolve(a.ascii_fold.then_some(true), ctx.file.extract.ascii_fold, false);
    let strict = resolve(a.strict.then_some(true), ctx.file.extract.strict, false);
    let mut manifest = ctx.start(
        "extract",
        serde_json::json!({ "input_dir": a.input_dir, "out": a.out, "ascii_fold": ascii_fold, "strict": strict }),
    );
    if !a.input_dir.is_dir() {
        return Err(Failure::Data(anyhow!("{} is not a directory", a.input_dir.display())));
    }

    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(&a.input_dir).sort_by_file_name() {
        let entry = entry.context("walking input directory")?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "lean") {
            files.push(entry.into_path());
        }
    }

    let opts = ExtractOptions { ascii_fold };
    let mut records: Vec<TheoremRecord> = Vec::new();
    let mut warnings = Vec::new();
    let mut read_errors = Vec::new();
    for path in &files {
        let rel = path.strip_prefix(&a.input_dir).unwrap_or(path).to_string_lossy().replace('\\', "/");
        match fs::read_to_string(path) {
            Ok(text) => {
                let ex = extract_theorems_with(&text, &rel, opts);
                records.extend(ex.records);
                warnings.extend(ex.warnings);
            }
            Err(e) => {
                eprintln!("warning: cannot read {}: {e}", path.display());
                read_errors.push(rel);
            }
        }
    }
    for w in &warnings {
        eprintln!("warning: {}:{}: {} ({})", w.source_file, w.line, w.message, w.name);
    }

    write_jsonl(&a.out, &records)?;
    manifest.add_input(&a.input_dir).context("hashing input")?;
    manifest.add_output(&a.out).context("hashing output")?;
    if let Some(wp) = &a.warnings {
        write_jsonl(wp, &warnings)?;
        manifest.add_output(wp).context("hashing output")?;
    }
    let counts = keyword_counts(&records);
    eprintln!(
        "extracted {} declarations from {} files ({}); {} warnings",
        records.len(),
        files.len(),
        counts.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join(", "),
        warnings.len()
    );
    ctx.finish(manifest, with_suffix(&a.out, ".manifest.json"))?;
    if strict && !read_errors.is_empty() {
        return Err(Failure::Data(anyhow!("{} file(s) could not be read", read_errors.len())));
    }
    Ok(())
}

fn cmd_rules(ctx: &Ctx, a: RuleArgs) -> Outcome {
    let templates_path = a.templates.clone().or_else(|| ctx.file.rules.templates.clone());
    let table = match &templates_path {
        Some(p) => TemplateTable::load(p).map_err(|e| Failure::Usage(e.into()))?,
        None => TemplateTable::default(),
    };
    let (tokenizer, tok_desc) = ctx.tokenizer()?;
    let mut manifest = ctx.start(
        "rule-informalize",
        serde_json::json!({
            "in": a.input, "out": a.out, "templates": templates_path,
            "effective_templates": table.iter().map(|(k, t)| (k.as_str(), t)).collect::<BTreeMap<_, _>>(),
            "tokenizer": tok_desc,
        }),
    );
    let theorems: Vec<TheoremRecord> = read_jsonl(&a.input)?;
    let mut pairs = Vec::with_capacity(theorems.len());
    let (mut matched, mut fragments, mut low) = (0usize, 0usize, 0usize);
    for t in &theorems {
        let rp = informalize_proof(t, &table).map_err(|e| anyhow!("{}: {e}", t.id))?;
        matched += rp.matched;
        fragments += rp.fragments;
        low += usize::from(rp.pair.low_quality);
        pairs.push(rp.pair.with_token_counts(&tokenizer));
    }
    write_jsonl(&a.out, &pairs)?;
    manifest.add_input(&a.input).context("hashing input")?;
    if let Some(p) = &templates_path {
        manifest.add_input(p).context("hashing input")?;
    }
    manifest.add_output(&a.out).context("hashing output")?;
    eprintln!(
        "{} pairs; {matched}/{fragments} tactic lines matched; {low} low-quality",
        pairs.len()
    );
    ctx.finish(manifest, with_suffix(&a.out, ".manifest.json"))
}

#[derive(Serialize)]
struct QuarantinedPrompt<'a> {
    index: usize,
    source: &'a str,
    formal: String,
    error: &'static str,
    message: String,
    raw: &'a str,
}

fn cmd_distill(ctx: &Ctx, a: DistillArgs) -> Outcome {
    let fc = &ctx.file.distill;
    let mode = match (a.mode, fc.mode.as_deref()) {
        (Some(m), _) => m,
        (None, Some("full")) | (None, None) => DistillMode::Full,
        (None, Some("tactic")) => DistillMode::Tactic,
        (None, Some(other)) => return Err(Failure::Usage(anyhow!("unknown distill mode `{other}` in config"))),
    };
    let budget = match (a.budget, &fc.budget) {
        (Some(b), _) => Some(b),
        (None, Some(s)) => Some(parse_decimal(s).map_err(|e| Failure::Usage(anyhow!("budget: {e}")))?),
        (None, None) => None,
    };
    let cache_dir = resolve(a.cache_dir.clone(), fc.cache_dir.clone(), PathBuf::from(".informalize-cache"));
    let shots_path = a.shots.clone().or_else(|| fc.shots.clone());

    let mut cfg = match &a.teacher_config {
        Some(p) => TeacherConfig::load(p).map_err(|e| Failure::Usage(e.into()))?,
        None => ctx.file.teacher.clone().unwrap_or_default(),
    };
    if let Some(e) = &a.endpoint {
        cfg.endpoint_url = e.clone();
    }
    if let Some(n) = a.max_parallel {
        cfg.max_parallel = n;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;

    let (tokenizer, tok_desc) = ctx.tokenizer()?;
    let mut manifest = ctx.start(
        "distill",
        serde_json::json!({
            "in": a.input, "out": a.out, "mode": mode, "shots": shots_path,
            "cache_dir": cache_dir, "budget": budget.map(|b| b.to_string()),
            "teacher": cfg, "allowlist": a.allowlist, "tokenizer": tok_desc,
        }),
    );
    let allow = a.allowlist.as_deref().map(read_allowlist).transpose()?;

    let specs: Vec<PromptSpec> = match mode {
        DistillMode::Full => {
            let shots: Vec<Shot> = match &shots_path {
                Some(p) => serde_json::from_str(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => default_shots().to_vec(),
            };
            read_jsonl::<TheoremRecord>(&a.input)?
                .into_iter()
                .filter(|t| allow.as_ref().is_none_or(|al| al.contains(&t.id)))
                .map(|t| PromptSpec {
                    mode: PromptMode::FullProof6Shot,
                    shots: shots.clone(),
                    target: informalize::prompt::PromptTarget::Theorem(t),
                })
                .collect()
        }
        DistillMode::Tactic => {
            let mut loaded = load_states(&a.input).context("loading proof states")?;
            if let Some(al) = &allow {
                loaded.retain_theorems(al);
            }
            for w in &loaded.warnings {
                eprintln!("warning: {}", serde_json::to_string(w).unwrap_or_default());
            }
            let statements: BTreeMap<String, String> = match &a.theorems {
                Some(p) => read_jsonl::<TheoremRecord>(p)?
                    .into_iter()
                    .map(|t| (t.id, t.statement))
                    .collect(),
                None => BTreeMap::new(),
            };
            loaded
                .tuples
                .into_iter()
                .map(|t| {
                    let stmt = statements.get(&t.theorem_id).cloned().unwrap_or_else(|| t.theorem_id.clone());
                    PromptSpec::tactic(t, stmt)
                })
                .collect()
        }
    };

    let cache_only = budget.is_some_and(|b| b.is_zero());
    let transport = match HttpTransport::from_env(&cfg) {
        Ok(t) => t,
        Err(_) if cache_only || specs.is_empty() => HttpTransport::new(&cfg, ""),
        Err(e) => return Err(Failure::Teacher(e.into())),
    };
    let cache = DiskCache::open(&cache_dir).with_context(|| format!("opening cache {}", cache_dir.display()))?;
    let client = TeacherClient::new(cfg.clone(), Arc::new(transport))
        .with_cache(cache)
        .with_tokenizer(tokenizer.clone());
    let outcome = client.informalize_batch(&specs, budget).map_err(|e| match e {
        TeacherError::Auth(_) => Failure::Teacher(e.into()),
    })?;

    let mut pairs = Vec::new();
    let mut quarantine = Vec::new();
    let mut endpoint_failures = 0;
    for (i, (spec, r)) in specs.iter().zip(&outcome.responses).enumerate() {
        if let Some(p) = r.to_pair(spec) {
            pairs.push(p.with_token_counts(&tokenizer));
            continue;
        }
        let err = r.error.clone().unwrap_or(ItemError::Format);
        let kind = match err {
            ItemError::Format => "TeacherFormatError",
            ItemError::Endpoint(_) => {
                endpoint_failures += 1;
                "EndpointError"
            }
            ItemError::Budget => "BudgetExhausted",
            ItemError::Prompt(_) => "PromptError",
        };
        quarantine.push(QuarantinedPrompt {
            index: i,
            source: spec.source(),
            formal: spec.formal(),
            error: kind,
            message: err.to_string(),
            raw: &r.raw_text,
        });
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }

    let ledger_path = a.ledger.clone().unwrap_or_else(|| with_suffix(&a.out, ".ledger.json"));
    let quarantine_path = a.quarantine.clone().unwrap_or_else(|| with_suffix(&a.out, ".quarantine.jsonl"));
    write_jsonl(&a.out, &pairs)?;
    write_jsonl(&quarantine_path, &quarantine)?;
    let cost_per_proof: BTreeMap<&str, String> = outcome
        .ledger
        .methods
        .iter()
        .map(|(m, e)| (m.as_str(), e.cost_per_proof().round_dp(6).normalize().to_string()))
        .collect();
    write_json(
        &ledger_path,
        &serde_json::json!({
            "ledger": outcome.ledger,
            "cost_per_proof": cost_per_proof,
            "total_cost": outcome.ledger.total_cost().to_string(),
            "network_calls": outcome.network_calls,
            "cache_hits": outcome.responses.iter().filter(|r| r.cached).count(),
        }),
    )?;
    manifest.add_input(&a.input).context("hashing input")?;
    manifest.add_output(&a.out).context("hashing output")?;
    manifest.add_output(&quarantine_path).context("hashing output")?;
    manifest.add_output(&ledger_path).context("hashing output")?;
    eprint!("{}", outcome.ledger.report());
    eprintln!(
        "{} prompts: {} pairs, {} quarantined, {} network calls",
        specs.len(),
        pairs.len(),
        quarantine.len(),
        outcome.network_calls
    );
    ctx.finish(manifest, with_suffix(&a.out, ".manifest.json"))?;
    if endpoint_failures > 0 {
        return Err(Failure::Teacher(anyhow!("{endpoint_failures} prompt(s) failed at the endpoint")));
    }
    Ok(())
}

#[derive(Deserialize)]
struct InformalProof {
    theorem_id: String,
    informal_proof: String,
}

fn cmd_align(ctx: &Ctx, a: AlignArgs) -> Outcome {
    let mut manifest = ctx.start(
        "align",
        serde_json::json!({ "states": a.states, "informal": a.informal, "out": a.out, "pairs": a.pairs }),
    );
    let loaded = load_states(&a.states).context("loading proof states")?;
    for w in &loaded.warnings {
        eprintln!("warning: {}", serde_json::to_string(w).unwrap_or_default());
    }
    let proofs: BTreeMap<String, String> = read_jsonl::<InformalProof>(&a.informal)?
        .into_iter()
        .map(|p| (p.theorem_id, p.informal_proof))
        .collect();
    let mut aligned = Vec::new();
    for (id, tuples) in loaded.by_theorem() {
        let Some(proof) = proofs.get(id) else {
            eprintln!("warning: no informal proof for {id}");
            continue;
        };
        let tuples: Vec<_> = tuples.into_iter().cloned().collect();
        match align_tactics_to_lines(&tuples, proof) {
            Ok(v) => aligned.extend(v),
            Err(e) => eprintln!("warning: {id}: {e}"),
        }
    }
    write_jsonl(&a.out, &aligned)?;
    manifest.add_input(&a.states).context("hashing input")?;
    manifest.add_input(&a.informal).context("hashing input")?;
    manifest.add_output(&a.out).context("hashing output")?;
    if let Some(p) = &a.pairs {
        let pairs: Vec<PairRecord> = aligned.iter().map(|x| x.to_pair()).collect();
        write_jsonl(p, &pairs)?;
        manifest.add_output(p).context("hashing output")?;
    }
    eprintln!("aligned {} tactics", aligned.len());
    ctx.finish(manifest, with_suffix(&a.out, ".manifest.json"))
}

fn cmd_assemble(ctx: &Ctx, a: AssembleArgs) -> Outcome {
    let drop_low_quality = resolve(a.drop_low_quality.then_some(true), ctx.file.assemble.drop_low_quality, false);
    let (tokenizer, tok_desc) = ctx.tokenizer()?;
    let mut manifest = ctx.start(
        "assemble",
        serde_json::json!({ "inputs": a.inputs, "out": a.out, "drop_low_quality": drop_low_quality, "tokenizer": tok_desc }),
    );
    let mut streams = Vec::new();
    for spec in &a.inputs {
        let (method, path) = match spec.split_once('=') {
            Some((m, p)) if Method::from_str(m).is_ok() => (Some(Method::from_str(m).expect("checked")), PathBuf::from(p)),
            _ => (None, PathBuf::from(spec)),
        };
        let text = read_text(&path)?;
        manifest.add_input(&path).context("hashing input")?;
        streams.push(PairStream::from_jsonl(path.display().to_string(), method, &text));
    }
    let out = assemble(&streams, &tokenizer, AssembleOptions { drop_low_quality });

    let quarantine_path = a.quarantine.clone().unwrap_or_else(|| with_suffix(&a.out, ".quarantine.jsonl"));
    let stats_path = a.stats_json.clone().unwrap_or_else(|| with_suffix(&a.out, ".stats.json"));
    write_jsonl(&a.out, &out.corpus)?;
    write_jsonl(&quarantine_path, &out.quarantine)?;
    write_json(&stats_path, &out.stats.to_report_json())?;
    for p in [&a.out, &quarantine_path, &stats_path] {
        manifest.add_output(p).context("hashing output")?;
    }
    eprintln!(
        "{} pairs, {} duplicates dropped, {} quarantined",
        out.corpus.len(),
        out.stats.total_duplicates(),
        out.quarantine.len()
    );
    ctx.finish(manifest, with_suffix(&a.out, ".manifest.json"))
}

fn cmd_stats(ctx: &Ctx, a: StatsArgs) -> Outcome {
    let (tokenizer, tok_desc) = ctx.tokenizer()?;
    let mut manifest = ctx.start(
        "stats",
        serde_json::json!({ "in": a.input, "out": a.out, "json": a.json, "tokenizer": tok_desc }),
    );
    let corpus: Vec<PairRecord> = read_jsonl(&a.input)?;
    let corpus: Vec<PairRecord> = corpus.into_iter().map(|r| r.with_token_counts(&tokenizer)).collect();
    let stats = CorpusStats::compute(&corpus, &BTreeMap::new());
    let table = stats.render_table();
    manifest.add_input(&a.input).context("hashing input")?;
    match &a.out {
        Some(p) => {
            write_atomic(p, table.as_bytes())?;
            manifest.add_output(p).context("hashing output")?;
        }
        None => print!("{table}"),
    }
    if let Some(p) = &a.json {
        write_json(p, &stats.to_report_json())?;
        manifest.add_output(p).context("hashing output")?;
    }
    let default = a
        .out
        .as_ref()
        .map(|o| with_suffix(o, ".manifest.json"))
        .unwrap_or_else(|| with_suffix(&a.input, ".stats.manifest.json"));
    ctx.finish(manifest, default)
}

fn cmd_split(ctx: &Ctx, a: SplitArgs) -> Outcome {
    let ratios = resolve(a.ratios, ctx.file.split.ratios, [0.8, 0.1, 0.1]);
    let seed = resolve(a.seed, ctx.file.split.seed, 0);
    let mut manifest = ctx.start(
        "split",
        serde_json::json!({ "in": a.input, "out_dir": a.out_dir, "ratios": ratios, "seed": seed }),
    );
    let corpus: Vec<PairRecord> = read_jsonl(&a.input)?;
    let s = dataset::split(&corpus, ratios, seed).map_err(|e| Failure::Usage(e.into()))?;
    manifest.add_input(&a.input).context("hashing input")?;
    for (name, part) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        let p = a.out_dir.join(format!("{name}.jsonl"));
        write_jsonl(&p, part)?;
        manifest.add_output(&p).context("hashing output")?;
    }
    eprintln!("train {} / val {} / test {}", s.train.len(), s.val.len(), s.test.len());
    ctx.finish(manifest, a.out_dir.join("manifest.json"))
}

fn cmd_otf(ctx: &Ctx, a: OtfArgs) -> Outcome {
    let f = &ctx.file.otf;
    let d = LoopConfig::default();
    let cfg = LoopConfig {
        batch_size: resolve(a.batch_size, f.batch_size, d.batch_size),
        max_steps: resolve(a.steps, f.max_steps, d.max_steps),
        eval_every: resolve(a.eval_every, f.eval_every, d.eval_every),
        seed: resolve(a.seed, f.seed, d.seed),
        plateau_window: resolve(a.plateau_window, f.plateau_window, d.plateau_window),
        plateau_epsilon: resolve(a.plateau_epsilon, f.plateau_epsilon, d.plateau_epsilon),
    };
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    let lr = resolve(a.learning_rate, f.learning_rate, ToyCipherTranslator::DEFAULT_LEARNING_RATE);
    let mut manifest = ctx.start(
        "otf-sim",
        serde_json::json!({ "corpus": a.corpus, "translator": a.translator, "loop": cfg, "learning_rate": lr, "plot": a.plot }),
    );
    let text = match &a.corpus {
        Some(p) => {
            manifest.add_input(p).context("hashing input")?;
            read_text(p)?
        }
        None => BUNDLED_OTF_CORPUS.to_string(),
    };
    let corpus: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if corpus.is_empty() {
        return Err(Failure::Data(anyhow!("corpus is empty")));
    }
    let mut translator: Box<dyn TranslatorPort> = match a.translator {
        TranslatorKind::Toy => Box::new(ToyCipherTranslator::with_learning_rate(&corpus, cfg.seed, lr)),
        TranslatorKind::Identity => Box::new(IdentityTranslator::for_corpus(&corpus)),
    };
    let trace = otf::run_loop(&corpus, translator.as_mut(), &cfg).map_err(|e| Failure::Data(e.into()))?;

    let trace_path = a.out_dir.join("trace.jsonl");
    let pairs_path = a.out_dir.join("pairs.jsonl");
    write_atomic(&trace_path, trace.to_jsonl().as_bytes())?;
    write_jsonl(&pairs_path, &otf::export_pairs(&trace))?;
    manifest.add_output(&trace_path).context("hashing output")?;
    manifest.add_output(&pairs_path).context("hashing output")?;
    if let Some(p) = &a.plot {
        let body = if p.extension().is_some_and(|e| e == "svg") {
            otf::trace_svg(&trace)
        } else {
            otf::trace_csv(&trace)
        };
        write_atomic(p, body.as_bytes())?;
        manifest.add_output(p).context("hashing output")?;
    }
    let last = trace.final_eval_loss().unwrap_or(f64::NAN);
    eprintln!(
        "initial eval loss {:.4}, final {:.4} (ratio {:.4}); plateau at {}",
        trace.initial_eval_loss,
        last,
        if trace.initial_eval_loss > 0.0 { last / trace.initial_eval_loss } else { 0.0 },
        trace.plateau_step.map_or("none".to_string(), |s| format!("step {s}"))
    );
    ctx.finish(manifest, a.out_dir.join("manifest.json"))
}

