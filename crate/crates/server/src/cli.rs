use std::future::Future;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use notobot_core::corpus::{encode_corpus, read_corpus, write_corpus, LabeledText};
use notobot_core::models::eval::{evaluate, format_table, EvalConfig, EvalReport};
use notobot_core::models::{Checkpoint, Classifier, ModelSpec};
use notobot_core::synth::{synthetic_corpus, synthetic_pool, CorpusMix};
use notobot_core::text::TextEncoder;
use notobot_pipeline::fixture::stream_fixture;
use notobot_pipeline::source::{parse_tweets, tweets_to_jsonl};
use notobot_pipeline::PipelineConfig;
use tokio::net::TcpListener;

use crate::api::{router, AppState};
use crate::feed::feed_router;

#[derive(Debug, Parser)]
#[command(name = "notobot", version, about = "Tobacco-intervention targeting: classifiers, audience matching and an approval pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one classifier and write a checkpoint.
    Train(TrainArgs),
    /// Repeated random-split evaluation of one or more classifiers.
    Evaluate(EvaluateArgs),
    /// Render saved evaluation reports.
    Report(ReportArgs),
    /// Run the pipeline and the HTTP API.
    Serve(ServeArgs),
    /// Serve a post file as a mock feed for the HTTP-polling source.
    Feed(FeedArgs),
    /// Write seeded synthetic data.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// JSON-lines corpus of {"id", "text", "label"}.
    #[arg(long, conflicts_with = "synthetic")]
    pub corpus: Option<PathBuf>,
    /// Use a seeded synthetic corpus of this size instead.
    #[arg(long)]
    pub synthetic: Option<usize>,
}

impl CorpusArgs {
    fn load(&self, seed: u64) -> Result<Vec<LabeledText>> {
        match (&self.corpus, self.synthetic) {
            (Some(path), _) => read_corpus(path).with_context(|| format!("reading {}", path.display())),
            (None, Some(n)) => Ok(synthetic_corpus(n, &CorpusMix::default(), seed)),
            (None, None) => bail!("pass --corpus PATH or --synthetic N"),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = ["logreg", "dtree", "svm", "mlp", "charcnn"])]
    pub model: Option<String>,
    /// JSON or TOML model spec with hyperparameters; overrides --model.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    pub data: CorpusArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Models to evaluate (repeatable); all five when omitted.
    #[arg(long = "model", value_parser = ["logreg", "dtree", "svm", "mlp", "charcnn"])]
    pub models: Vec<String>,
    /// Model spec files (repeatable), evaluated after --model entries.
    #[arg(long = "spec")]
    pub specs: Vec<PathBuf>,
    #[command(flatten)]
    pub data: CorpusArgs,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to save the reports as JSON.
    #[arg(long, default_value = "reports.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "reports.json")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "NOTOBOT_CONFIG", default_value = "notobot.toml")]
    pub config: PathBuf,
    /// Overrides `server.port` from the config.
    #[arg(long, env = "NOTOBOT_PORT")]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct FeedArgs {
    #[arg(long)]
    pub tweets: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8090)]
    pub port: u16,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthKind {
    /// Labeled texts for training and evaluation.
    Corpus,
    /// Intervention messages with author metadata.
    Pool,
    /// Posts for the pipeline source.
    Stream,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn load_spec(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text)?
    } else {
        serde_json::from_str(&text)?
    };
    Ok(spec)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let spec = match (&args.spec, &args.model) {
        (Some(path), _) => load_spec(path)?,
        (None, Some(name)) => ModelSpec::from_name(name).expect("validated by clap"),
        (None, None) => bail!("pass --model NAME or --spec PATH"),
    };
    let texts = args.data.load(args.seed)?;
    let encoder = TextEncoder::default();
    let data = encode_corpus(&texts, &encoder);
    let model = spec.train(&data, args.seed)?;
    let correct = data
        .iter()
        .filter(|ex| model.predict(&ex.encoded).map(|p| p == ex.label).unwrap_or(false))
        .count();
    Checkpoint::new(&encoder, spec.clone(), model).save(&args.out)?;
    println!(
        "{}: trained on {} examples, training accuracy {:.4}; wrote {}",
        spec.display_name(),
        data.len(),
        correct as f64 / data.len().max(1) as f64,
        args.out.display()
    );
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<Vec<EvalReport>> {
    let mut specs: Vec<ModelSpec> = args
        .models
        .iter()
        .map(|m| ModelSpec::from_name(m).expect("validated by clap"))
        .collect();
    for p in &args.specs {
        specs.push(load_spec(p)?);
    }
    if specs.is_empty() {
        specs = ModelSpec::all_defaults();
    }
    let texts = args.data.load(args.seed)?;
    let data = encode_corpus(&texts, &TextEncoder::default());
    let cfg = EvalConfig { n_runs: args.runs, split: args.split, seed: args.seed };
    let mut reports = Vec::new();
    for spec in &specs {
        eprintln!("evaluating {} ...", spec.display_name());
        reports.push(evaluate(spec, &data, &cfg)?);
    }
    std::fs::write(&args.out, serde_json::to_string_pretty(&reports)?)?;
    print!("{}", format_table(&reports));
    Ok(reports)
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let reports: Vec<EvalReport> = serde_json::from_str(&text)?;
    match args.format {
        ReportFormat::Table => print!("{}", format_table(&reports)),
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&reports)?),
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    match args.kind {
        SynthKind::Corpus => write_corpus(&args.out, &synthetic_corpus(args.n, &CorpusMix::default(), args.seed))?,
        SynthKind::Pool => {
            let lines: Vec<String> = synthetic_pool(args.n, args.seed)
                .iter()
                .map(serde_json::to_string)
                .collect::<Result<_, _>>()?;
            std::fs::write(&args.out, lines.join("\n") + "\n")?;
        }
        SynthKind::Stream => std::fs::write(&args.out, tweets_to_jsonl(&stream_fixture(args.n, args.seed)))?,
    }
    println!("wrote {} {:?} records to {}", args.n, args.kind, args.out.display());
    Ok(())
}

/// Runs the pipeline and API until `shutdown` resolves, then stops the
/// pipeline cleanly.
pub async fn serve(cfg: PipelineConfig, listener: TcpListener, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<()> {
    let (handle, task) = notobot_pipeline::setup::start(&cfg)?;
    let app = router(AppState { pipeline: handle.clone() }, cfg.server.ui_dir.clone());
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    handle.shutdown().await.ok();
    task.await?;
    Ok(())
}

pub async fn serve_cmd(args: &ServeArgs) -> Result<()> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(port) = args.port {
        cfg.server.port = port;
    }
    let listener = TcpListener::bind((cfg.server.bind.as_str(), cfg.server.port))
        .await
        .with_context(|| format!("binding {}:{}", cfg.server.bind, cfg.server.port))?;
    serve(cfg, listener, shutdown_signal()).await
}

pub async fn feed_cmd(args: &FeedArgs) -> Result<()> {
    let tweets = parse_tweets(&std::fs::read_to_string(&args.tweets)?)?;
    let listener = TcpListener::bind((args.bind.as_str(), args.port)).await?;
    tracing::info!(addr = %listener.local_addr()?, posts = tweets.len(), "feed");
    axum::serve(listener, feed_router(tweets)).with_graceful_shutdown(shutdown_signal()).await?;
    Ok(())
}

/// Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        tokio::signal::ctrl_c().await.ok();
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutdown signal received");
}
