use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use adlens::analysis::{demographics, granger_analysis, read_polls, state_analysis, trigram_analysis};
use adlens::embed::{EmbeddingModel, EncoderKind, TrainConfig, WordVectors};
use adlens::infer::{entity_views, evaluate, read_predictions, write_predictions, HoldoutSet, Similarity};
use adlens::labels::Issue;
use adlens::lexicon::{build_lexicon, IssueDocCorpus, IssueLexicon};
use adlens::pipeline::{infer, read_file, train_model, weak_labels, write_file, CorpusBundle, PipelineError};
use adlens::report::{Report, RunManifest};
use adlens::synth::{generate, SynthSpec};
use adlens::textproc::{default_stopwords, load_stopwords};
use adlens::weaklabel::{CueConfig, WeakLabels};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use serde_json::json;

/// Stance and issue analysis of political ad archives.
#[derive(Parser)]
#[command(name = "adlens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load an ad-archive JSONL export and group duplicate texts.
    Ingest {
        ads: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Issue lexicon commands.
    Lexicon {
        #[command(subcommand)]
        command: LexiconCommand,
    },
    /// Label explicit funding entities and their ads.
    Weaklabel {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON cue lists overriding the built-in name rules.
        #[arg(long)]
        cues: Option<PathBuf>,
    },
    /// Train the joint embedding.
    Train {
        corpus: PathBuf,
        lexicon: PathBuf,
        labels: PathBuf,
        wordvecs: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        encoder: Option<EncoderKind>,
        /// JSON training config; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict a stance and an issue for every ad.
    Infer {
        model: PathBuf,
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Score with cosine instead of dot product.
        #[arg(long)]
        cosine: bool,
    },
    /// Accuracy and macro-F1 against annotated holdout ads.
    Eval { predictions: PathBuf, holdout: PathBuf },
    /// Audience, regional and trigram reports.
    Analyze {
        #[command(subcommand)]
        command: AnalyzeCommand,
    },
    /// Granger tests between daily impressions and polls.
    Granger {
        polls: PathBuf,
        predictions: PathBuf,
        corpus: PathBuf,
        #[arg(long, default_value_t = 15)]
        max_lag: usize,
        #[arg(long, default_value = "2020-11-03")]
        cutoff: NaiveDate,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic archive with known labels.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// ads.jsonl issues.jsonl gold.csv
        #[arg(long, num_args = 3, value_names = ["ADS", "ISSUES", "GOLD"])]
        out: Vec<PathBuf>,
        /// Defaults to wordvecs.txt next to the gold file.
        #[arg(long)]
        wordvecs: Option<PathBuf>,
        /// Defaults to polls.csv next to the gold file.
        #[arg(long)]
        polls: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LexiconCommand {
    /// Build a PMI lexicon from issue-labeled documents.
    Build {
        issues: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    Demographics {
        predictions: PathBuf,
        corpus: PathBuf,
        /// Add one-sided p-values for "more women than men".
        #[arg(long)]
        one_sided: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    State {
        predictions: PathBuf,
        corpus: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 0.10)]
        min_regional_share: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Trigrams {
        predictions: PathBuf,
        corpus: PathBuf,
        model: PathBuf,
        #[arg(long)]
        issue: Issue,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// One stopword per line; the built-in list otherwise.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = e.exit_code();
        let kind = match code {
            2 => "usage",
            4 => "numeric",
            _ => "data",
        };
        Failure { code, kind, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, kind: "usage", message: message.into() }
}

fn data(message: impl Into<String>) -> Failure {
    Failure { code: 3, kind: "data", message: message.into() }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// `ADLENS_SEED` wins over `--seed`.
fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    match std::env::var("ADLENS_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("ADLENS_SEED must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

/// Writes the report to `out` when given, and always to stdout.
fn emit(json: String, out: Option<&Path>) -> Result<(), Failure> {
    if let Some(path) = out {
        write_file(path, json.as_bytes())?;
    }
    print!("{json}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let started = Instant::now();
    match cli.command {
        Command::Ingest { ads, out } => {
            let raw = read_file(&ads)?;
            let bundle = CorpusBundle::ingest(&raw);
            bundle.save(&out)?;
            let manifest = RunManifest::new("ingest").input("ads", raw.as_bytes()).finish(started);
            let body = json!({
                "loaded": bundle.summary.loaded,
                "skipped": bundle.summary.skipped,
                "skipped_lines": bundle.summary.skipped_lines,
                "unique_texts": bundle.dedup.len(),
                "entities": bundle.ads.entities().len(),
            });
            emit(Report { manifest, body }.to_json(), None)
        }
        Command::Lexicon { command: LexiconCommand::Build { issues, threshold, out } } => {
            let raw = read_file(&issues)?;
            let docs = IssueDocCorpus::from_jsonl(&raw).map_err(PipelineError::from)?;
            let lexicon = build_lexicon(&docs, threshold).map_err(PipelineError::from)?;
            write_file(&out, lexicon.to_json().as_bytes())?;
            let manifest = RunManifest::new("lexicon build")
                .config(&json!({ "threshold": threshold }))
                .input("issues", raw.as_bytes())
                .finish(started);
            let body = json!({ "entries": lexicon.len(), "per_issue": lexicon.issue_sizes() });
            emit(Report { manifest, body }.to_json(), None)
        }
        Command::Weaklabel { corpus, out, cues } => {
            let bundle = CorpusBundle::load(&corpus)?;
            let cues: CueConfig = match &cues {
                Some(p) => CueConfig::from_json(&read_file(p)?).map_err(PipelineError::from)?,
                None => CueConfig::default(),
            };
            let labels = weak_labels(&bundle, &cues);
            let json = serde_json::to_string_pretty(&labels).expect("labels serialize");
            write_file(&out, json.as_bytes())?;
            let manifest = RunManifest::new("weaklabel")
                .config(&cues)
                .input("corpus", &read_bytes(&corpus)?)
                .finish(started);
            emit(Report { manifest, body: json!({ "counts": labels.counts }) }.to_json(), None)
        }
        Command::Train { corpus, lexicon, labels, wordvecs, seed, encoder, config, epochs, lr, out } => {
            let mut cfg: TrainConfig = match &config {
                Some(p) => serde_json::from_str(&read_file(p)?).map_err(|e| usage(format!("config: {e}")))?,
                None => TrainConfig::default(),
            };
            if let Some(s) = resolve_seed(seed)? {
                cfg.seed = s;
            }
            if let Some(k) = encoder {
                cfg.encoder_kind = k;
            }
            if let Some(e) = epochs {
                cfg.max_epochs = e;
            }
            if let Some(l) = lr {
                cfg.lr = l;
            }
            let bundle = CorpusBundle::load(&corpus)?;
            let lex_raw = read_file(&lexicon)?;
            let lex = IssueLexicon::from_json(&lex_raw).map_err(PipelineError::from)?;
            let labels_raw = read_file(&labels)?;
            let weak: WeakLabels = serde_json::from_str(&labels_raw).map_err(PipelineError::from)?;
            let vectors = WordVectors::load(&wordvecs).map_err(PipelineError::from)?;
            let model = train_model(&bundle, &lex, &weak, &vectors, &cfg)?;
            let sidecar = model.save(&out).map_err(PipelineError::from)?;
            let manifest = RunManifest::new("train")
                .seed(cfg.seed)
                .config(&cfg)
                .input("corpus", &read_bytes(&corpus)?)
                .input("lexicon", lex_raw.as_bytes())
                .input("labels", labels_raw.as_bytes())
                .input("wordvecs", &read_bytes(&wordvecs)?)
                .finish(started);
            let history = model.history();
            let best = history
                .iter()
                .min_by(|a, b| a.validation_loss.total_cmp(&b.validation_loss))
                .map(|r| r.epoch);
            let body = json!({
                "model_digest": adlens::report::sha256_hex(&model.to_bytes()),
                "manifest_file": sidecar.file_name().map(|n| n.to_string_lossy().into_owned()),
                "epochs_run": history.len().saturating_sub(1),
                "best_epoch": best,
                "history": history,
            });
            emit(Report { manifest, body }.to_json(), None)
        }
        Command::Infer { model, corpus, out, cosine } => {
            let m = EmbeddingModel::load(&model).map_err(PipelineError::from)?;
            let bundle = CorpusBundle::load(&corpus)?;
            let sim = if cosine { Similarity::Cosine } else { Similarity::Dot };
            let preds = infer(&bundle, &m, sim);
            let file = File::create(&out).map_err(|e| data(format!("{}: {e}", out.display())))?;
            write_predictions(file, &preds).map_err(PipelineError::from)?;
            let mut stances: BTreeMap<String, usize> = BTreeMap::new();
            let mut issues: BTreeMap<String, usize> = BTreeMap::new();
            for p in &preds {
                *stances.entry(p.stance.to_string()).or_default() += 1;
                *issues.entry(p.issue.to_string()).or_default() += 1;
            }
            let manifest = RunManifest::new("infer")
                .config(&sim)
                .input("model", &read_bytes(&model)?)
                .input("corpus", &read_bytes(&corpus)?)
                .finish(started);
            let body = json!({
                "ads": preds.len(),
                "stances": stances,
                "issues": issues,
                "entity_views": entity_views(bundle.ads.ads(), &preds),
            });
            emit(Report { manifest, body }.to_json(), None)
        }
        Command::Eval { predictions, holdout } => {
            let preds = read_predictions(open(&predictions)?).map_err(PipelineError::from)?;
            let gold = HoldoutSet::read_csv(open(&holdout)?).map_err(PipelineError::from)?;
            let ev = evaluate(&preds, &gold).map_err(PipelineError::from)?;
            let manifest = RunManifest::new("eval")
                .input("predictions", &read_bytes(&predictions)?)
                .input("holdout", &read_bytes(&holdout)?)
                .finish(started);
            emit(Report { manifest, body: ev }.to_json(), None)
        }
        Command::Analyze { command } => analyze(command, started),
        Command::Granger { polls, predictions, corpus, max_lag, cutoff, out } => {
            let rows = read_polls(open(&polls)?)?;
            let preds = read_predictions(open(&predictions)?).map_err(PipelineError::from)?;
            let bundle = CorpusBundle::load(&corpus)?;
            let report = granger_analysis(bundle.ads.ads(), &preds, &rows, max_lag, cutoff)?;
            let manifest = RunManifest::new("granger")
                .config(&json!({ "max_lag": max_lag, "cutoff": cutoff }))
                .input("polls", &read_bytes(&polls)?)
                .input("predictions", &read_bytes(&predictions)?)
                .input("corpus", &read_bytes(&corpus)?)
                .finish(started);
            emit(Report { manifest, body: report }.to_json(), out.as_deref())
        }
        Command::Synth { spec, seed, out, wordvecs, polls } => {
            let mut s: SynthSpec = match &spec {
                Some(p) => serde_json::from_str(&read_file(p)?).map_err(|e| usage(format!("spec: {e}")))?,
                None => SynthSpec::default(),
            };
            if let Some(v) = resolve_seed(seed)? {
                s.seed = v;
            }
            let [ads, issues, gold] = <[PathBuf; 3]>::try_from(out).map_err(|_| usage("--out takes three paths"))?;
            let dir = gold.parent().map(Path::to_path_buf).unwrap_or_default();
            let wordvecs = wordvecs.unwrap_or_else(|| dir.join("wordvecs.txt"));
            let polls = polls.unwrap_or_else(|| dir.join("polls.csv"));
            let corpus = generate(&s).map_err(|e| usage(e.to_string()))?;
            corpus
                .write_files(&ads, &issues, &gold, &wordvecs, &polls)
                .map_err(|e| data(e.to_string()))?;
            let manifest = RunManifest::new("synth").seed(s.seed).config(&s).finish(started);
            let body = json!({
                "ads": corpus.ads.len(),
                "entities": corpus.entities.len(),
                "issue_docs": corpus.issue_docs.len(),
                "vocabulary": corpus.word_vectors.len(),
            });
            emit(Report { manifest, body }.to_json(), None)
        }
    }
}

fn analyze(command: AnalyzeCommand, started: Instant) -> Result<(), Failure> {
    match command {
        AnalyzeCommand::Demographics { predictions, corpus, one_sided, out } => {
            let preds = read_predictions(open(&predictions)?).map_err(PipelineError::from)?;
            let bundle = CorpusBundle::load(&corpus)?;
            let report = demographics(bundle.ads.ads(), &preds, one_sided);
            let manifest = RunManifest::new("analyze demographics")
                .config(&json!({ "one_sided": one_sided }))
                .input("predictions", &read_bytes(&predictions)?)
                .input("corpus", &read_bytes(&corpus)?)
                .finish(started);
            emit(Report { manifest, body: report }.to_json(), out.as_deref())
        }
        AnalyzeCommand::State { predictions, corpus, state, min_regional_share, out } => {
            if !(0.0..1.0).contains(&min_regional_share) {
                return Err(usage("--min-regional-share must lie in [0, 1)"));
            }
            let preds = read_predictions(open(&predictions)?).map_err(PipelineError::from)?;
            let bundle = CorpusBundle::load(&corpus)?;
            let report = state_analysis(bundle.ads.ads(), &preds, &state, min_regional_share);
            let manifest = RunManifest::new("analyze state")
                .config(&json!({ "state": state, "min_regional_share": min_regional_share }))
                .input("predictions", &read_bytes(&predictions)?)
                .input("corpus", &read_bytes(&corpus)?)
                .finish(started);
            emit(Report { manifest, body: report }.to_json(), out.as_deref())
        }
        AnalyzeCommand::Trigrams { predictions, corpus, model, issue, top, stopwords, out } => {
            let preds = read_predictions(open(&predictions)?).map_err(PipelineError::from)?;
            let bundle = CorpusBundle::load(&corpus)?;
            let m = EmbeddingModel::load(&model).map_err(PipelineError::from)?;
            let stop = match &stopwords {
                Some(p) => load_stopwords(p).map_err(|e| data(e.to_string()))?,
                None => default_stopwords(),
            };
            let report = trigram_analysis(&bundle.ads, &preds, &m, issue, top, &stop)?;
            let manifest = RunManifest::new("analyze trigrams")
                .config(&json!({ "issue": issue, "top": top, "stopwords": stop }))
                .input("predictions", &read_bytes(&predictions)?)
                .input("corpus", &read_bytes(&corpus)?)
                .input("model", &read_bytes(&model)?)
                .finish(started);
            emit(Report { manifest, body: report }.to_json(), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            fail(&usage(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            fail(&f);
            ExitCode::from(f.code as u8)
        }
    }
}

fn fail(f: &Failure) {
    eprintln!("{}", json!({ "error": f.kind, "message": f.message, "exit_code": f.code }));
}
