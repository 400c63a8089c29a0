//! `culturank` — drive the retrieval + answer-selection pipeline from
//! the command line.
//!
//! Subcommands: `index` (BM25 stats/snapshot), `rank` (evidence-bundle
//! audit dump), `answer` (end-to-end predictions.csv), `evaluate`
//! (exact-match report). Exit codes: 0 success, 1 input error, 2 backend
//! unavailable, 3 internal invariant violation.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use culturank_core::{
    build_index, exact_match_report, export_predictions, load_documents,
    load_gazetteer, load_predictions, load_questions, run_batched, save_index, to_one_hot,
    write_report, ChoiceScorer, EmbedCache, EmbeddingProvider, Error, HashedBagEmbedder,
    HttpChoiceScorer, HttpEmbedder, OverlapStubScorer, PipelineContext, PromptTemplate, Ranker,
};

use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "culturank", version, about = "Region-aware hybrid retrieval for multiple-choice QA")]
struct Cli {
    /// Pipeline config JSON; flags override its values.
    #[arg(long, global = true, env = "CULTURANK_CONFIG")]
    config: Option<PathBuf>,

    /// Evidence documents (JSONL).
    #[arg(long, global = true)]
    documents: Option<PathBuf>,

    /// Question set (JSONL).
    #[arg(long, global = true)]
    questions: Option<PathBuf>,

    /// Region-alias gazetteer (JSONL).
    #[arg(long, global = true)]
    gazetteer: Option<PathBuf>,

    /// Prompt template file; bundled default when omitted.
    #[arg(long, global = true)]
    template: Option<PathBuf>,

    /// Questions per scoring batch.
    #[arg(long, global = true)]
    batch_size: Option<usize>,

    /// Evidence chunks to keep per question.
    #[arg(long, global = true)]
    top_k: Option<usize>,

    /// Use the bundled deterministic embedding stub.
    #[arg(long, global = true)]
    stub_embeddings: bool,

    /// Use the bundled token-overlap choice scorer.
    #[arg(long, global = true)]
    stub_scorer: bool,

    /// Directory for predictions, reports, and the effective config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the BM25 index and print corpus statistics.
    Index {
        /// Also persist the index as a versioned JSON snapshot.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Print the ranked evidence bundle for each question as JSON lines.
    Rank {
        /// Rank a single question instead of the whole set.
        #[arg(long)]
        question_id: Option<String>,
    },
    /// Run the full pipeline and export one-hot predictions.
    Answer,
    /// Score exported predictions against gold answers.
    Evaluate {
        /// Predictions CSV; defaults to <output_dir>/predictions.csv.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Input(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Core(e) => match e {
                Error::ProviderUnavailable { .. }
                | Error::ScorerUnavailable { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFiniteLogit { .. }
                | Error::ZeroVector => 2,
                Error::OutOfRange { .. } | Error::NegativeScore { .. } | Error::IdMismatch { .. } => 3,
                _ => 1,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };

    // Flags win over the file.
    if let Some(p) = &cli.documents {
        cfg.paths.documents = Some(p.clone());
    }
    if let Some(p) = &cli.questions {
        cfg.paths.questions = Some(p.clone());
    }
    if let Some(p) = &cli.gazetteer {
        cfg.paths.gazetteer = Some(p.clone());
    }
    if let Some(p) = &cli.template {
        cfg.paths.template = Some(p.clone());
    }
    if let Some(p) = &cli.output_dir {
        cfg.paths.output_dir = p.clone();
    }
    if let Some(n) = cli.batch_size {
        cfg.batch_size = n;
    }
    if let Some(k) = cli.top_k {
        cfg.ranker.top_k = k;
    }
    if cli.stub_embeddings {
        cfg.backends.stub_embeddings = true;
    }
    if cli.stub_scorer {
        cfg.backends.stub_scorer = true;
    }
    cfg.validate()?;

    match &cli.command {
        Command::Index { snapshot } => cmd_index(&cfg, snapshot.as_deref()),
        Command::Rank { question_id } => cmd_rank(&cfg, question_id.as_deref()),
        Command::Answer => cmd_answer(&cfg),
        Command::Evaluate { predictions } => cmd_evaluate(&cfg, predictions.as_deref()),
    }
}

fn require(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    let path = path
        .clone()
        .ok_or_else(|| CliError::Input(format!("missing required path: --{flag} (or paths.{} in the config)", flag.replace('-', "_"))))?;
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{} does not exist",
            path.display()
        )));
    }
    Ok(path)
}

fn load_template(cfg: &PipelineConfig) -> Result<PromptTemplate, CliError> {
    let template = match &cfg.paths.template {
        Some(path) => PromptTemplate::load(path)?,
        None => PromptTemplate::default(),
    };
    Ok(template.with_max_evidence_chars(cfg.max_evidence_chars))
}

fn make_provider(cfg: &PipelineConfig) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    if cfg.backends.stub_embeddings {
        Ok(Box::new(HashedBagEmbedder))
    } else if let Some(url) = &cfg.backends.embedding_url {
        Ok(Box::new(HttpEmbedder::new(url)))
    } else {
        Err(CliError::Input(
            "no embedding backend: set backends.embedding_url or pass --stub-embeddings".into(),
        ))
    }
}

fn make_scorer(cfg: &PipelineConfig) -> Result<Box<dyn ChoiceScorer>, CliError> {
    if cfg.backends.stub_scorer {
        Ok(Box::new(OverlapStubScorer))
    } else if let Some(url) = &cfg.backends.scorer_url {
        Ok(Box::new(HttpChoiceScorer::new(url)))
    } else {
        Err(CliError::Input(
            "no choice scorer: set backends.scorer_url or pass --stub-scorer".into(),
        ))
    }
}

fn cmd_index(cfg: &PipelineConfig, snapshot: Option<&Path>) -> Result<(), CliError> {
    let documents = require(&cfg.paths.documents, "documents")?;
    let docs = load_documents(&documents)?;
    let index = build_index(&docs, cfg.bm25);
    println!("N={}", index.doc_count());
    println!("vocabulary={}", index.vocabulary_size());
    println!("avg_doc_length={}", index.avg_doc_length());
    if let Some(path) = snapshot {
        save_index(path, &index)?;
        println!("snapshot={}", path.display());
    }
    Ok(())
}

fn cmd_rank(cfg: &PipelineConfig, question_id: Option<&str>) -> Result<(), CliError> {
    let docs = load_documents(require(&cfg.paths.documents, "documents")?)?;
    let questions = load_questions(require(&cfg.paths.questions, "questions")?)?;
    let gazetteer = load_gazetteer(require(&cfg.paths.gazetteer, "gazetteer")?)?;
    let index = build_index(&docs, cfg.bm25);
    let provider = make_provider(cfg)?;
    let cache = EmbedCache::new();
    let ranker = Ranker::new(&docs, &index, provider.as_ref(), &cache, &gazetteer, cfg.ranker.clone())?;

    let selected: Vec<_> = match question_id {
        Some(id) => {
            let q = questions
                .iter()
                .find(|q| q.question_id == id)
                .ok_or_else(|| CliError::Input(format!("unknown question_id \"{id}\"")))?;
            vec![q]
        }
        None => questions.iter().collect(),
    };
    for question in selected {
        let bundle = ranker.rank_top_k(question)?;
        println!("{}", serde_json::to_string(&bundle).expect("bundle serializes"));
    }
    Ok(())
}

fn cmd_answer(cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = load_documents(require(&cfg.paths.documents, "documents")?)?;
    let questions = load_questions(require(&cfg.paths.questions, "questions")?)?;
    let gazetteer = load_gazetteer(require(&cfg.paths.gazetteer, "gazetteer")?)?;
    let template = load_template(cfg)?;
    let provider = make_provider(cfg)?;
    let scorer = make_scorer(cfg)?;

    let index = build_index(&docs, cfg.bm25);
    let cache = EmbedCache::new();
    let ctx = PipelineContext {
        ranker: Ranker::new(&docs, &index, provider.as_ref(), &cache, &gazetteer, cfg.ranker.clone())?,
        template: &template,
    };

    let predictions = run_batched(&questions, &ctx, scorer.as_ref(), cfg.batch_size, cfg.max_in_flight)?;
    let rows: Vec<_> = predictions.iter().map(to_one_hot).collect();

    let out_dir = &cfg.paths.output_dir;
    fs::create_dir_all(out_dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;

    // Export through a temp file so a crash mid-write never leaves a
    // partial predictions.csv behind.
    let final_path = out_dir.join("predictions.csv");
    let tmp_path = out_dir.join("predictions.csv.tmp");
    export_predictions(&tmp_path, &rows)?;
    fs::rename(&tmp_path, &final_path)
        .map_err(|e| CliError::Input(format!("cannot move {}: {e}", tmp_path.display())))?;

    let config_path = out_dir.join("effective_config.json");
    fs::write(&config_path, serde_json::to_string_pretty(cfg).expect("config serializes"))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", config_path.display())))?;

    println!("wrote {} predictions to {}", rows.len(), final_path.display());
    println!("effective config: {}", config_path.display());
    Ok(())
}

fn cmd_evaluate(cfg: &PipelineConfig, predictions: Option<&Path>) -> Result<(), CliError> {
    let questions = load_questions(require(&cfg.paths.questions, "questions")?)?;
    let predictions_path = match predictions {
        Some(p) => p.to_path_buf(),
        None => cfg.paths.output_dir.join("predictions.csv"),
    };
    if !predictions_path.exists() {
        return Err(CliError::Input(format!(
            "{} does not exist (run `culturank answer` first or pass --predictions)",
            predictions_path.display()
        )));
    }
    let rows = load_predictions(&predictions_path)?;
    let preds: Vec<_> = rows.iter().map(|r| r.to_prediction()).collect();
    let report = exact_match_report(&preds, &questions)?;

    fs::create_dir_all(&cfg.paths.output_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", cfg.paths.output_dir.display())))?;
    let report_path = cfg.paths.output_dir.join("report.json");
    write_report(&report_path, &report)?;

    println!(
        "total={} correct={} accuracy={:.4} macro_avg={:.4}",
        report.total, report.correct, report.accuracy, report.macro_avg
    );
    for (language, stats) in &report.per_language {
        println!(
            "{language}: {}/{} ({:.4})",
            stats.correct, stats.total, stats.accuracy
        );
    }
    println!("report: {}", report_path.display());
    Ok(())
}
