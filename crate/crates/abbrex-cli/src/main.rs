//! `abbrex` - expand ambiguous abbreviations in clinical free text.
//!
//! Subcommands mirror the pipeline stages: `ingest`, `train`, `detect`,
//! `rank`, `expand`, `eval`, plus `run` for the whole thing from a config
//! file. Exit codes: 0 success, 1 usage, 2 data/format error, 3 internal.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use abbrex_core::config::PipelineConfig;
use abbrex_core::corpus::{
    ingest_corpus, read_manifest, Corpus, DocMode, ManifestEntry, SourceKind, TokenizedDocument,
};
use abbrex_core::embedding::{train_sgns, EmbeddingMatrix};
use abbrex_core::eval::{compare_modes_with, evaluate_with, read_gold, EmbeddingSource};
use abbrex_core::kb::KnowledgeBase;
use abbrex_core::pipeline::{detections_tsv_with, expand_document_with, run_pipeline, PipelineError};
use abbrex_core::rank::{rank_candidates, RankerConfig, RankerMode};

#[derive(Parser)]
#[command(name = "abbrex", version, about = "Clinical abbreviation expansion")]
struct Cli {
    /// Config file with `key = value` defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random decision (training init, sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CorpusArgs {
    /// Corpus manifest: `path<TAB>source_kind` rows.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Input text files treated as clinical notes (one document per file).
    #[arg(long = "in", value_name = "FILE")]
    inputs: Vec<PathBuf>,

    /// per-file or per-line documents for manifest ingestion.
    #[arg(long, value_name = "MODE")]
    doc_mode: Option<String>,
}

#[derive(Args, Clone, Default)]
struct TrainArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Initial learning rate (linear decay).
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    min_count: Option<u32>,
    /// Frequent-word subsampling threshold; 0 disables.
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct RankArgs {
    /// Weight of the rating term in [0, 1].
    #[arg(long)]
    lambda: Option<f64>,
    /// combined, rating_only or embedding_only.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus manifest and report per-source token counts.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Also dump every token as TSV.
        #[arg(long)]
        dump_tokens: bool,
    },
    /// Train skip-gram embeddings on the manifest corpus.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Output directory for embeddings.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect abbreviation mentions; TSV on stdout.
    Detect {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Rank the candidate expansions of one abbreviation; TSV on stdout.
    Rank {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        abbrev: String,
        #[command(flatten)]
        rank: RankArgs,
    },
    /// Rewrite a document, replacing each mention with its top expansion.
    Expand {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        out_file: Option<PathBuf>,
        #[command(flatten)]
        rank: RankArgs,
    },
    /// Score predictions against a gold file.
    Eval {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Extra embedding file reported as its own comparison row.
        #[arg(long)]
        general_embeddings: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[command(flatten)]
        rank: RankArgs,
        /// Add a rating/embedding/combined mode-comparison table.
        #[arg(long)]
        compare: bool,
        /// Write the report as TSV here as well.
        #[arg(long)]
        report_tsv: Option<PathBuf>,
    },
    /// Run the full pipeline from the config file.
    Run {
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

/// Write to stdout, exiting quietly if the reader closed the pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).is_err() || out.flush().is_err() {
        std::process::exit(0);
    }
}

fn load_config(
    cli_config: &Option<PathBuf>,
    seed: Option<u64>,
) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match cli_config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn doc_mode_of(arg: &Option<String>, cfg: &PipelineConfig) -> Result<DocMode, PipelineError> {
    match arg {
        None => Ok(cfg.doc_mode),
        Some(s) => DocMode::parse(s).ok_or(PipelineError::MissingSetting(
            "doc-mode must be per-file or per-line",
        )),
    }
}

fn require(path: Option<PathBuf>, what: &'static str) -> Result<PathBuf, PipelineError> {
    path.ok_or(PipelineError::MissingSetting(what))
}

/// Documents from `--in` files, or from the manifest when no files given.
fn load_documents(
    corpus_args: &CorpusArgs,
    cfg: &PipelineConfig,
) -> Result<Vec<TokenizedDocument>, PipelineError> {
    if !corpus_args.inputs.is_empty() {
        let entries: Vec<ManifestEntry> = corpus_args
            .inputs
            .iter()
            .map(|p| ManifestEntry { path: p.clone(), kind: SourceKind::ClinicalNote })
            .collect();
        return Ok(ingest_corpus(&entries, DocMode::PerFile)?.documents);
    }
    let manifest = corpus_args.manifest.clone().or_else(|| cfg.manifest.clone());
    if let Some(manifest) = manifest {
        let entries = read_manifest(&manifest)?;
        let mode = doc_mode_of(&corpus_args.doc_mode, cfg)?;
        let docs = ingest_corpus(&entries, mode)?.documents;
        if !docs.is_empty() {
            return Ok(docs);
        }
    }
    Err(PipelineError::MissingSetting("--in or --manifest"))
}

fn load_training_corpus(
    corpus_args: &CorpusArgs,
    cfg: &PipelineConfig,
) -> Result<Corpus, PipelineError> {
    let manifest = require(
        corpus_args.manifest.clone().or_else(|| cfg.manifest.clone()),
        "--manifest",
    )?;
    let entries = read_manifest(&manifest)?;
    let mode = doc_mode_of(&corpus_args.doc_mode, cfg)?;
    Ok(ingest_corpus(&entries, mode)?)
}

fn merged_train_config(args: &TrainArgs, cfg: &PipelineConfig) -> abbrex_core::TrainConfig {
    let mut train = cfg.train.clone();
    if let Some(v) = args.dim {
        train.dim = v;
    }
    if let Some(v) = args.window {
        train.window = v;
    }
    if let Some(v) = args.negatives {
        train.negatives = v;
    }
    if let Some(v) = args.epochs {
        train.epochs = v;
    }
    if let Some(v) = args.lr {
        train.initial_learning_rate = v;
    }
    if let Some(v) = args.min_count {
        train.min_count = v;
    }
    if let Some(v) = args.subsample {
        train.subsample_threshold = v;
    }
    if let Some(v) = args.workers {
        train.workers = v;
    }
    train
}

fn merged_ranker(args: &RankArgs, cfg: &PipelineConfig) -> Result<RankerConfig, PipelineError> {
    let lambda = args.lambda.unwrap_or(cfg.lambda);
    let mode = match &args.mode {
        None => cfg.mode,
        Some(s) => RankerMode::parse(s).ok_or(PipelineError::MissingSetting(
            "mode must be combined, rating_only or embedding_only",
        ))?,
    };
    Ok(RankerConfig::new(lambda, mode)?)
}

fn load_kb(path: Option<PathBuf>, cfg: &PipelineConfig) -> Result<KnowledgeBase, PipelineError> {
    let path = require(path.or_else(|| cfg.kb.clone()), "--kb")?;
    Ok(KnowledgeBase::load(&path)?)
}

/// Load the embedding file; rating-only mode works without one.
fn load_embeddings(
    path: Option<PathBuf>,
    cfg: &PipelineConfig,
    ranker: &RankerConfig,
) -> Result<EmbeddingMatrix, PipelineError> {
    match path.or_else(|| cfg.embeddings.clone()) {
        Some(path) => EmbeddingMatrix::load(&path).map_err(PipelineError::Embeddings),
        None if ranker.mode() == RankerMode::RatingOnly => Ok(EmbeddingMatrix::empty(1)),
        None => Err(PipelineError::MissingSetting("--embeddings")),
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let cfg = load_config(&cli.config, cli.seed)?;

    match cli.command {
        Command::Ingest { corpus, dump_tokens } => {
            let loaded = load_training_corpus(&corpus, &cfg)?;
            let stats = loaded.stats();
            let mut out = format!("{:<20} {:>9} {:>9}\n", "source_kind", "documents", "tokens");
            let mut docs_total = 0;
            let mut tokens_total = 0;
            for (kind, s) in &stats {
                out.push_str(&format!(
                    "{:<20} {:>9} {:>9}\n",
                    kind.as_str(),
                    s.documents,
                    s.tokens
                ));
                docs_total += s.documents;
                tokens_total += s.tokens;
            }
            out.push_str(&format!("{:<20} {:>9} {:>9}\n", "total", docs_total, tokens_total));
            if dump_tokens {
                for doc in &loaded.documents {
                    for (i, t) in doc.tokens.iter().enumerate() {
                        out.push_str(&format!(
                            "{}\t{}\t{}\t{}\t{}\t{}\n",
                            doc.id,
                            i,
                            t.surface,
                            t.kind.as_str(),
                            t.span.start,
                            t.span.end
                        ));
                    }
                }
            }
            emit(&out);
        }

        Command::Train { corpus, train, out } => {
            let loaded = load_training_corpus(&corpus, &cfg)?;
            let train_cfg = merged_train_config(&train, &cfg);
            let matrix = train_sgns(&loaded, &train_cfg).map_err(PipelineError::Train)?;
            let out_dir = out.unwrap_or_else(|| cfg.out.clone());
            std::fs::create_dir_all(&out_dir).map_err(|source| PipelineError::Write {
                path: out_dir.clone(),
                source,
            })?;
            let path = out_dir.join("embeddings.txt");
            matrix.save(&path).map_err(PipelineError::Embeddings)?;
            emit(&format!(
                "trained {} vectors (dim {}) -> {}\n",
                matrix.len(),
                matrix.dim(),
                path.display()
            ));
        }

        Command::Detect { kb, corpus } => {
            let kb = load_kb(kb, &cfg)?;
            let docs = load_documents(&corpus, &cfg)?;
            emit(&detections_tsv_with(&docs, &kb, &cfg.detector));
        }

        Command::Rank { kb, embeddings, abbrev, rank } => {
            let kb = load_kb(kb, &cfg)?;
            let ranker = merged_ranker(&rank, &cfg)?;
            let matrix = load_embeddings(embeddings, &cfg, &ranker)?;
            match rank_candidates(&abbrev, &kb, &matrix, &ranker) {
                None => {
                    eprintln!("abbreviation not in knowledge base: {abbrev}");
                    std::process::exit(2);
                }
                Some(ranked) => {
                    let mut out = String::new();
                    for r in ranked {
                        out.push_str(&format!(
                            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                            r.candidate.phrase_text(),
                            r.candidate.rating,
                            r.rating_term,
                            r.cosine_term,
                            r.score
                        ));
                    }
                    emit(&out);
                }
            }
        }

        Command::Expand { kb, embeddings, input, out_file, rank } => {
            let kb = load_kb(kb, &cfg)?;
            let ranker = merged_ranker(&rank, &cfg)?;
            let matrix = load_embeddings(embeddings, &cfg, &ranker)?;
            let input = require(input.or_else(|| cfg.input.clone()), "--in")?;
            let entries = vec![ManifestEntry { path: input, kind: SourceKind::ClinicalNote }];
            let docs = ingest_corpus(&entries, DocMode::PerFile)?.documents;
            let mut output = String::new();
            for doc in &docs {
                output.push_str(&expand_document_with(doc, &kb, &matrix, &ranker, &cfg.detector));
            }
            match out_file {
                Some(path) => std::fs::write(&path, output)
                    .map_err(|source| PipelineError::Write { path, source })?,
                None => emit(&output),
            }
        }

        Command::Eval {
            kb,
            embeddings,
            general_embeddings,
            corpus,
            gold,
            rank,
            compare,
            report_tsv,
        } => {
            let kb = load_kb(kb, &cfg)?;
            let docs = load_documents(&corpus, &cfg)?;
            let gold_path = require(gold.or_else(|| cfg.gold.clone()), "--gold")?;
            let gold = read_gold(&gold_path)?;
            let ranker = merged_ranker(&rank, &cfg)?;
            let matrix = load_embeddings(embeddings, &cfg, &ranker)?;

            let report = evaluate_with(&docs, &kb, &matrix, &ranker, &gold, &cfg.detector)?;
            emit(&report.render_text());
            let mut tsv = report.render_tsv();

            if compare {
                let mut sources = vec![EmbeddingSource::Available {
                    label: "task".to_string(),
                    matrix,
                }];
                let general = general_embeddings.or_else(|| cfg.general_embeddings.clone());
                if let Some(path) = general {
                    sources.push(match EmbeddingMatrix::load(&path) {
                        Ok(m) => EmbeddingSource::Available {
                            label: "general".to_string(),
                            matrix: m,
                        },
                        Err(e) => EmbeddingSource::Unavailable {
                            label: "general".to_string(),
                            reason: e.to_string(),
                        },
                    });
                }
                let cmp = compare_modes_with(
                    &docs,
                    &kb,
                    &sources,
                    &gold,
                    ranker.effective_lambda(),
                    &cfg.detector,
                )?;
                emit("\n");
                emit(&cmp.render_text());
                tsv.push_str(&cmp.render_tsv());
            }

            if let Some(path) = report_tsv {
                std::fs::write(&path, tsv)
                    .map_err(|source| PipelineError::Write { path, source })?;
            }
        }

        Command::Run { out } => {
            let mut cfg = cfg;
            if let Some(out) = out {
                cfg.out = out;
            }
            let artifacts = run_pipeline(&cfg)?;
            let mut out = String::new();
            out.push_str(&format!("embeddings: {}\n", artifacts.embeddings.display()));
            out.push_str(&format!("detections: {}\n", artifacts.detections.display()));
            out.push_str(&format!("expanded:   {}\n", artifacts.expanded_dir.display()));
            if let Some(report) = &artifacts.eval_report {
                out.push_str(&format!("eval:       {}\n", report.display()));
                out.push('\n');
                out.push_str(&std::fs::read_to_string(report).unwrap_or_default());
            }
            if let Some(modes) = &artifacts.mode_comparison {
                out.push('\n');
                out.push_str(&std::fs::read_to_string(modes).unwrap_or_default());
            }
            emit(&out);
        }
    }
    Ok(())
}
