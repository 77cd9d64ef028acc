//! Command-line front end. `main.rs` only maps [`run`]'s result to an exit
//! code: 0 success, 2 a finding (drift FAIL, invalid records), 1 an error.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::acceptance::{
    build_dataset_with_profiles, evaluate, label_histograms, permutation_importance, stratified_split, train,
    Dataset, Label, Profile, ProfileSchema, SplitConfig, TrainConfig, DEFAULT_REPEATS,
};
use crate::corpus::{filter_corpus, load_corpus, write_corpus, FilterConfig, LoadMode, META_KEY};
use crate::drift::{render_table, run_drift, DriftConfig};
use crate::features::{extract_corpus_features, feature_histogram, write_histogram_csv, HistogramBins};
use crate::human_eval::{compare_variants, read_raw_csv, read_raw_jsonl, summarize_evals, validate_eval};
use crate::safeguards::{gate_prompt, GateConfig, GateDecision, RateLimiter, DEFAULT_WINDOW_SECS};
use crate::synth::{generate, GenSpec};

pub const TOOL: &str = "surveval";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FINDING: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = TOOL, version, about = "Evaluate corpora of generated surveys")]
pub struct Cli {
    /// Print only machine-readable payloads on stdout; no logs on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// JSON config with optional sections: filter, drift, split, train.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse every record of a corpus; issues go to stderr as JSONL.
    Validate {
        corpus: PathBuf,
    },
    /// Apply the evaluation-data filter.
    Filter {
        input: PathBuf,
        /// Kept records (JSONL).
        #[arg(long)]
        out: PathBuf,
        /// Filter report JSON; printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Per-survey feature matrix.
    Extract {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pooled unigram, bigram and character distributions (JSON).
        #[arg(long)]
        pooled: Option<PathBuf>,
    },
    /// PSI drift report between two corpora.
    Drift {
        baseline: PathBuf,
        candidate: PathBuf,
        /// Report JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the per-feature table on stdout.
        #[arg(long)]
        table: bool,
    },
    /// Histogram of one CSV column.
    Hist(HistArgs),
    /// Human-evaluation checklist scores.
    #[command(name = "human-eval", subcommand)]
    HumanEval(HumanEvalCommand),
    /// Join a corpus with accept/not-accept outcomes into a dataset CSV.
    BuildDataset {
        corpus: PathBuf,
        /// CSV with columns id,label.
        #[arg(long)]
        outcomes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON `{"schema": {...}, "profiles": {id: {...}}}` adding one-hot
        /// industry and job-role columns.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Split, train the logistic model, evaluate and rank features.
    TrainAcceptance(TrainArgs),
    /// Screen prompts read from stdin, one per line, printing JSONL decisions.
    Gate(GateArgs),
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the generator spec.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct HistArgs {
    /// Features or dataset CSV.
    pub input: PathBuf,
    #[arg(long)]
    pub feature: String,
    /// `int:LO:HI`, `width:LO:HI:STEP` or `edges:E1,E2,...`.
    #[arg(long)]
    pub bins: String,
    #[arg(long)]
    pub out: PathBuf,
    /// One histogram per value of the `label` column.
    #[arg(long)]
    pub by_label: bool,
}

#[derive(Debug, Subcommand)]
pub enum HumanEvalCommand {
    /// Per-variant means and score distributions.
    Summarize {
        /// CSV, or JSONL when the extension is .jsonl.
        evals: PathBuf,
        /// Per-metric deltas B - A.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        compare: Option<Vec<String>>,
        #[arg(long)]
        table: bool,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub importance: PathBuf,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: usize,
    /// Directory for per-label histograms of prompt and question length.
    #[arg(long)]
    pub hist_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// Rule file; the bundled rules are used when omitted.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub max_chars: usize,
    /// Allowed requests per user per window.
    #[arg(long)]
    pub rate: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECS)]
    pub window: i64,
    /// Limiter state, loaded if present and written back on exit.
    #[arg(long, requires = "rate")]
    pub state: Option<PathBuf>,
}

/// The `--config` document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub filter: FilterConfig,
    pub drift: DriftConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
}

/// Identifies the tool build, configuration and seed behind an artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    fn new(effective: &Value, seed: Option<u64>) -> Self {
        let digest = Sha256::digest(effective.to_string().as_bytes());
        Self { tool: TOOL, version: VERSION, config_hash: hex::encode(&digest[..8]), seed }
    }

    pub fn csv_comment(&self) -> String {
        let seed = self.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        format!("# {} {} config_hash={} seed={}\n", self.tool, self.version, self.config_hash, seed)
    }

    pub fn jsonl_line(&self) -> String {
        format!("{}\n", json!({ META_KEY: self }))
    }

    /// Adds a `_meta` key to a JSON object payload.
    fn stamp(&self, payload: impl Serialize) -> Value {
        let mut v = serde_json::to_value(payload).expect("payload serializes");
        match v.as_object_mut() {
            Some(obj) => {
                obj.insert(META_KEY.to_string(), serde_json::to_value(self).expect("serializes"));
                v
            }
            None => json!({ META_KEY: self, "data": v }),
        }
    }
}

struct Ctx {
    quiet: bool,
    config: ConfigFile,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Logs the effective configuration and returns its provenance.
    fn begin(&self, command: &str, effective: Value, seed: Option<u64>) -> Provenance {
        let effective = json!({ "command": command, "config": effective, "seed": seed });
        self.log(format!("effective config: {effective}"));
        Provenance::new(&effective, seed)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn require_file(path: &Path) -> Result<()> {
    ensure!(path.is_file(), "input file not found: {}", path.display());
    Ok(())
}

fn load_strict(path: &Path) -> Result<Vec<crate::corpus::CorpusRecord>> {
    require_file(path)?;
    Ok(load_corpus(path, LoadMode::Strict).with_context(|| format!("loading {}", path.display()))?.records)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else { return Ok(ConfigFile::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let cfg: ConfigFile = serde_json::from_str(&text).with_context(|| format!("bad config {}", path.display()))?;
    cfg.filter.validate()?;
    cfg.drift.validate()?;
    cfg.train.validate()?;
    Ok(cfg)
}

/// Parses arguments from the process and runs the command.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let ctx = Ctx { quiet: cli.quiet, config: read_config(cli.config.as_deref())? };
    match cli.command {
        Command::Validate { corpus } => cmd_validate(&ctx, &corpus),
        Command::Filter { input, out, report } => cmd_filter(&ctx, &input, &out, report.as_deref()),
        Command::Extract { corpus, out, pooled } => cmd_extract(&ctx, &corpus, &out, pooled.as_deref()),
        Command::Drift { baseline, candidate, out, table } => {
            cmd_drift(&ctx, &baseline, &candidate, out.as_deref(), table)
        }
        Command::Hist(args) => cmd_hist(&ctx, &args),
        Command::HumanEval(HumanEvalCommand::Summarize { evals, compare, table }) => {
            cmd_human_eval(&ctx, &evals, compare.as_deref(), table)
        }
        Command::BuildDataset { corpus, outcomes, out, profiles } => {
            cmd_build_dataset(&ctx, &corpus, &outcomes, &out, profiles.as_deref())
        }
        Command::TrainAcceptance(args) => cmd_train(&ctx, &args),
        Command::Gate(args) => cmd_gate(&ctx, &args, io::stdin().lock(), &mut io::stdout().lock()),
        Command::Synth { spec, out, seed } => cmd_synth(&ctx, &spec, &out, seed),
    }
}

fn cmd_validate(ctx: &Ctx, path: &Path) -> Result<u8> {
    require_file(path)?;
    ctx.begin("validate", json!({ "corpus": path }), None);
    let loaded = load_corpus(path, LoadMode::Lenient)?;
    let mut err = io::stderr().lock();
    for issue in &loaded.skipped {
        writeln!(err, "{}", serde_json::to_string(issue)?)?;
    }
    print_json(&json!({ "valid": loaded.records.len(), "invalid": loaded.skipped.len() }))?;
    Ok(if loaded.skipped.is_empty() { EXIT_OK } else { EXIT_FINDING })
}

fn cmd_filter(ctx: &Ctx, input: &Path, out: &Path, report_path: Option<&Path>) -> Result<u8> {
    let records = load_strict(input)?;
    let cfg = &ctx.config.filter;
    let prov = ctx.begin("filter", serde_json::to_value(cfg)?, None);
    let (kept, report) = filter_corpus(&records, cfg);
    let mut w = create(out)?;
    w.write_all(prov.jsonl_line().as_bytes())?;
    write_corpus(&mut w, &kept)?;
    w.flush()?;
    ctx.log(report.to_table());
    let stamped = prov.stamp(&report);
    match report_path {
        Some(p) => write_json(p, &stamped)?,
        None => print_json(&stamped)?,
    }
    Ok(EXIT_OK)
}

fn cmd_extract(ctx: &Ctx, corpus: &Path, out: &Path, pooled: Option<&Path>) -> Result<u8> {
    let records = load_strict(corpus)?;
    let prov = ctx.begin("extract", json!({}), None);
    let feats = extract_corpus_features(&records);
    let mut w = create(out)?;
    w.write_all(prov.csv_comment().as_bytes())?;
    feats.write_csv(&mut w)?;
    if let Some(p) = pooled {
        let dists = json!({
            "unigrams": feats.pooled_unigrams,
            "bigrams": feats.pooled_bigrams,
            "characters": feats.pooled_chars,
        });
        write_json(p, &prov.stamp(dists))?;
    }
    ctx.log(format!("extracted {} surveys", feats.len()));
    Ok(EXIT_OK)
}

fn cmd_drift(ctx: &Ctx, baseline: &Path, candidate: &Path, out: Option<&Path>, table: bool) -> Result<u8> {
    let base = load_strict(baseline)?;
    let cand = load_strict(candidate)?;
    let cfg = &ctx.config.drift;
    let prov = ctx.begin("drift", serde_json::to_value(cfg)?, None);
    let report = run_drift(
        &stem(baseline),
        &extract_corpus_features(&base),
        &stem(candidate),
        &extract_corpus_features(&cand),
        cfg,
    )?;
    let stamped = prov.stamp(&report);
    match out {
        Some(p) => write_json(p, &stamped)?,
        None if !table => print_json(&stamped)?,
        None => {}
    }
    if table {
        print!("{}", render_table(std::slice::from_ref(&report)));
    }
    ctx.log(format!(
        "{}: {} FAIL, {} PASS, max {}",
        report.label(),
        report.n_fail,
        report.n_pass,
        report.max_feature
    ));
    Ok(if report.n_fail == 0 { EXIT_OK } else { EXIT_FINDING })
}

/// Reads one numeric column (and optionally `label`) from a CSV whose `#`
/// lines are comments.
fn read_column(path: &Path, feature: &str, with_label: bool) -> Result<Vec<(Option<String>, f64)>> {
    require_file(path)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == feature)
        .with_context(|| format!("no column '{feature}' in {}", path.display()))?;
    let label_col = if with_label {
        Some(headers.iter().position(|h| h == "label").context("--by-label needs a 'label' column")?)
    } else {
        None
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v: f64 = rec[col].trim().parse().with_context(|| format!("row {}: bad number '{}'", i + 1, &rec[col]))?;
        out.push((label_col.map(|c| rec[c].to_string()), v));
    }
    Ok(out)
}

fn cmd_hist(ctx: &Ctx, args: &HistArgs) -> Result<u8> {
    let bins = HistogramBins::parse(&args.bins)?;
    let rows = read_column(&args.input, &args.feature, args.by_label)?;
    let prov = ctx.begin("hist", json!({ "feature": args.feature, "bins": args.bins, "by_label": args.by_label }), None);
    let mut w = create(&args.out)?;
    w.write_all(prov.csv_comment().as_bytes())?;
    if args.by_label {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (label, v) in rows {
            groups.entry(label.unwrap_or_default()).or_default().push(v);
        }
        let mut wr = csv::Writer::from_writer(&mut w);
        wr.write_record(["label", "bin_low", "bin_high", "count"])?;
        for (label, values) in &groups {
            for r in feature_histogram(values, &bins) {
                wr.write_record([
                    label.clone(),
                    crate::features::format_value(r.bin_low),
                    crate::features::format_value(r.bin_high),
                    r.count.to_string(),
                ])?;
            }
        }
        wr.flush()?;
    } else {
        let values: Vec<f64> = rows.into_iter().map(|(_, v)| v).collect();
        write_histogram_csv(&mut w, &feature_histogram(&values, &bins))?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_human_eval(ctx: &Ctx, path: &Path, compare: Option<&[String]>, table: bool) -> Result<u8> {
    require_file(path)?;
    ctx.begin("human-eval summarize", json!({ "compare": compare }), None);
    let raw = if path.extension().is_some_and(|e| e == "jsonl") {
        read_raw_jsonl(&fs::read_to_string(path)?)?
    } else {
        read_raw_csv(File::open(path)?)?
    };
    let mut records = Vec::new();
    let mut n_invalid = 0;
    for (i, r) in raw.iter().enumerate() {
        match validate_eval(r) {
            Ok(rec) => records.push(rec),
            Err(issues) => {
                n_invalid += 1;
                for issue in issues {
                    ctx.log(format!("record {}: {issue}", i + 1));
                }
            }
        }
    }
    let summary = summarize_evals(&records);
    let mut payload = json!({ "summary": summary, "n_invalid": n_invalid });
    if let Some([a, b]) = compare {
        let va = summary.variants.get(a).with_context(|| format!("no records for variant '{a}'"))?;
        let vb = summary.variants.get(b).with_context(|| format!("no records for variant '{b}'"))?;
        payload["compare"] = serde_json::to_value(compare_variants(va, vb)?)?;
    }
    if table {
        print!("{}", summary.to_table());
    } else {
        print_json(&payload)?;
    }
    Ok(if n_invalid == 0 { EXIT_OK } else { EXIT_FINDING })
}

#[derive(Deserialize)]
struct ProfilesFile {
    schema: ProfileSchema,
    profiles: BTreeMap<String, Profile>,
}

fn read_outcomes(path: &Path) -> Result<BTreeMap<String, Label>> {
    require_file(path)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ensure!(rec.len() >= 2, "outcomes row {}: expected id,label", i + 1);
        let label = rec[1].parse::<Label>().map_err(|e| anyhow::anyhow!("outcomes row {}: {e}", i + 1))?;
        out.insert(rec[0].to_string(), label);
    }
    Ok(out)
}

fn cmd_build_dataset(ctx: &Ctx, corpus: &Path, outcomes: &Path, out: &Path, profiles: Option<&Path>) -> Result<u8> {
    let records = load_strict(corpus)?;
    let outcomes = read_outcomes(outcomes)?;
    let profiles: Option<ProfilesFile> = match profiles {
        Some(p) => Some(serde_json::from_str(&fs::read_to_string(p)?).context("bad profiles file")?),
        None => None,
    };
    let prov = ctx.begin("build-dataset", json!({ "profiles": profiles.as_ref().map(|p| &p.schema) }), None);
    let ds = build_dataset_with_profiles(&records, &outcomes, profiles.as_ref().map(|p| (&p.schema, &p.profiles)))?;
    let mut w = create(out)?;
    w.write_all(prov.csv_comment().as_bytes())?;
    ds.write_csv(&mut w)?;
    w.flush()?;
    ctx.log(format!("{} examples, classes {:?}", ds.len(), ds.class_counts()));
    Ok(EXIT_OK)
}

/// Per-label histograms written by `train-acceptance --hist-dir`.
const LABEL_HISTOGRAMS: [(&str, &str); 3] = [
    ("prompt_char_length", "width:0:1000:50"),
    ("avg_n_words_per_question", "width:0:30:2"),
    ("n_words_in_survey", "width:0:300:20"),
];

fn cmd_train(ctx: &Ctx, args: &TrainArgs) -> Result<u8> {
    require_file(&args.dataset)?;
    let ds = Dataset::read_csv(File::open(&args.dataset)?)?;
    let mut split = ctx.config.split;
    split.seed = args.seed;
    if let Some(f) = args.train_fraction {
        split.train_fraction = f;
    }
    let tcfg = ctx.config.train;
    let prov = ctx.begin(
        "train-acceptance",
        json!({ "split": split, "train": tcfg, "repeats": args.repeats }),
        Some(args.seed),
    );
    let (train_set, test_set) = stratified_split(&ds, split)?;
    let model = train(&train_set, &tcfg)?;
    let train_metrics = evaluate(&model, &train_set)?;
    let test_metrics = evaluate(&model, &test_set)?;
    let importance = permutation_importance(&model, &test_set, args.seed, args.repeats)?;

    write_json(&args.out, &prov.stamp(&model))?;
    write_json(
        &args.metrics,
        &prov.stamp(json!({
            "n_train": train_set.len(),
            "n_test": test_set.len(),
            "train_class_counts": train_set.class_counts(),
            "test_class_counts": test_set.class_counts(),
            "final_loss": model.loss_history.last(),
            "train": train_metrics,
            "test": test_metrics,
        })),
    )?;
    write_json(&args.importance, &prov.stamp(json!({ "importance": importance })))?;

    if let Some(dir) = &args.hist_dir {
        for (feature, spec) in LABEL_HISTOGRAMS {
            if ds.feature_index(feature).is_none() {
                continue;
            }
            let hists = label_histograms(&ds, feature, &HistogramBins::parse(spec)?)?;
            let mut w = create(&dir.join(format!("{feature}_by_label.csv")))?;
            w.write_all(prov.csv_comment().as_bytes())?;
            let mut wr = csv::Writer::from_writer(&mut w);
            wr.write_record(["label", "bin_low", "bin_high", "count"])?;
            for (label, rows) in hists {
                for r in rows {
                    wr.write_record([
                        label.to_string(),
                        crate::features::format_value(r.bin_low),
                        crate::features::format_value(r.bin_high),
                        r.count.to_string(),
                    ])?;
                }
            }
            wr.flush()?;
            drop(wr);
            w.flush()?;
        }
    }
    ctx.log(format!(
        "train acc {:.4}, test acc {:.4}, test auc {}",
        train_metrics.accuracy,
        test_metrics.accuracy,
        test_metrics.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"))
    ));
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
struct GateRequest {
    #[serde(default)]
    user: Option<String>,
    prompt: String,
    #[serde(default)]
    ts: Option<i64>,
}

const ANONYMOUS: &str = "anonymous";

/// Screens stdin prompts. A line is either a JSON object
/// `{"user", "prompt", "ts"}` or plain prompt text. Only prompts that pass
/// the gate consume rate-limit quota.
fn cmd_gate<R: BufRead, W: Write>(ctx: &Ctx, args: &GateArgs, input: R, out: &mut W) -> Result<u8> {
    let cfg = match &args.rules {
        Some(p) => GateConfig::from_json(args.max_chars, &fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?)?,
        None => GateConfig::with_default_rules(args.max_chars)?,
    };
    let mut limiter = match (args.rate, &args.state) {
        (Some(n), Some(state)) if state.is_file() => {
            let l = RateLimiter::from_snapshot(&fs::read_to_string(state)?).context("bad limiter state")?;
            ensure!(
                l.limit() == n && l.window_secs() == args.window,
                "state file was written with a different --rate/--window"
            );
            Some(l)
        }
        (Some(n), _) => Some(RateLimiter::new(n, args.window)?),
        (None, _) => None,
    };
    ctx.begin(
        "gate",
        json!({
            "rules": args.rules, "max_chars": args.max_chars, "rate": args.rate, "window": args.window,
            "n_leak_rules": cfg.leak_rules.len(), "n_off_topic_rules": cfg.off_topic_rules.len(),
        }),
        None,
    );
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req = match serde_json::from_str::<GateRequest>(&line) {
            Ok(r) if line.trim_start().starts_with('{') => r,
            _ => GateRequest { user: None, prompt: line.clone(), ts: None },
        };
        let user = req.user.unwrap_or_else(|| ANONYMOUS.to_string());
        let decision = gate_prompt(&req.prompt, &cfg);
        let mut row = Map::new();
        row.insert("line".into(), json!(i + 1));
        row.insert("user".into(), json!(user));
        match &decision {
            GateDecision::Allow => {
                row.insert("verdict".into(), json!("allow"));
            }
            GateDecision::Reject(reason) => {
                row.insert("verdict".into(), json!("reject"));
                if let Value::Object(m) = serde_json::to_value(reason)? {
                    row.extend(m);
                }
            }
        }
        if let (Some(l), true) = (limiter.as_mut(), decision.is_allowed()) {
            let ts = match req.ts {
                Some(ts) => ts,
                None => chrono::Utc::now().timestamp(),
            };
            let rd = l.check_rate(&user, ts)?;
            if !rd.allowed {
                row.insert("verdict".into(), json!("reject"));
                row.insert("reason".into(), json!("rate_limited"));
            }
            row.insert("retry_after".into(), json!(rd.retry_after));
            row.insert("remaining".into(), json!(rd.remaining));
        }
        writeln!(out, "{}", Value::Object(row))?;
    }
    if let (Some(l), Some(state)) = (&limiter, &args.state) {
        let mut w = create(state)?;
        w.write_all(l.to_snapshot().as_bytes())?;
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn cmd_synth(ctx: &Ctx, spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<u8> {
    require_file(spec_path)?;
    let mut text = String::new();
    File::open(spec_path)?.read_to_string(&mut text)?;
    let mut spec: GenSpec = serde_json::from_str(&text).with_context(|| format!("bad spec {}", spec_path.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let prov = ctx.begin("synth", serde_json::to_value(&spec)?, Some(spec.seed));
    let records = generate(&spec)?;
    let mut w = create(out)?;
    w.write_all(prov.jsonl_line().as_bytes())?;
    write_corpus(&mut w, &records)?;
    w.flush()?;
    ctx.log(format!("wrote {} records to {}", records.len(), out.display()));
    Ok(EXIT_OK)
}
