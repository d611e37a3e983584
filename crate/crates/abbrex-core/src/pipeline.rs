//! End-to-end pipeline: ingest, train (or load), detect, expand and
//! optionally evaluate, writing every artifact under one output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::corpus::{ingest_corpus, read_manifest, Corpus, DocMode, IngestError, ManifestEntry, SourceKind, TokenizedDocument};
use crate::detect::{detect_with, DetectorConfig};
use crate::embedding::{train_sgns, EmbeddingError, EmbeddingMatrix};
use crate::eval::{
    compare_modes_with, evaluate_with, expand_mention, read_gold, EmbeddingSource, EvalError,
};
use crate::kb::{KbError, KnowledgeBase};
use crate::rank::{RankerConfig, RankError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config: missing required setting {0:?}")]
    MissingSetting(&'static str),
    #[error("ingest stage: {0}")]
    Ingest(#[from] IngestError),
    #[error("kb stage: {0}")]
    Kb(#[from] KbError),
    #[error("train stage: {0}")]
    Train(EmbeddingError),
    #[error("embeddings stage: {0}")]
    Embeddings(EmbeddingError),
    #[error("rank stage: {0}")]
    Rank(#[from] RankError),
    #[error("eval stage: {0}")]
    Eval(#[from] EvalError),
    #[error("write stage: failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit code: 1 for usage/config mistakes, 2 for data or
    /// format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::MissingSetting(_) => 1,
            PipelineError::Train(EmbeddingError::InvalidConfig(_)) => 1,
            PipelineError::Rank(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineArtifacts {
    pub out_dir: PathBuf,
    pub embeddings: PathBuf,
    pub detections: PathBuf,
    pub expanded_dir: PathBuf,
    pub eval_report: Option<PathBuf>,
    pub eval_tsv: Option<PathBuf>,
    pub mode_comparison: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Write {
        path: path.to_owned(),
        source,
    })
}

/// Replace every detected mention with its top-ranked expansion, splicing
/// at token spans. Slash compounds expand component-wise, rejoined with
/// `/`; mentions without any candidates stay as written.
pub fn expand_document(
    doc: &TokenizedDocument,
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
) -> String {
    expand_document_with(doc, kb, matrix, cfg, &DetectorConfig::default())
}

pub fn expand_document_with(
    doc: &TokenizedDocument,
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
    detector: &DetectorConfig,
) -> String {
    let mut out = String::new();
    let mut cursor = 0;
    for mention in detect_with(doc, kb, detector) {
        if let Some(expansion) = expand_mention(&mention, kb, matrix, cfg) {
            let span = doc.tokens[mention.token_index].span;
            out.push_str(&doc.text[cursor..span.start]);
            out.push_str(&expansion);
            cursor = span.end;
        }
    }
    out.push_str(&doc.text[cursor..]);
    out
}

/// Detection report rows: `doc_id<TAB>token_index<TAB>surface<TAB>in_kb`.
pub fn detections_tsv(docs: &[TokenizedDocument], kb: &KnowledgeBase) -> String {
    detections_tsv_with(docs, kb, &DetectorConfig::default())
}

pub fn detections_tsv_with(
    docs: &[TokenizedDocument],
    kb: &KnowledgeBase,
    detector: &DetectorConfig,
) -> String {
    let mut out = String::new();
    for doc in docs {
        for m in detect_with(doc, kb, detector) {
            writeln!(out, "{}\t{}\t{}\t{}", m.doc_id, m.token_index, m.surface, m.in_kb).unwrap();
        }
    }
    out
}

fn sanitize_file_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Run the full pipeline described by the config. Every stage failure
/// carries its stage name in the error.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineArtifacts, PipelineError> {
    let kb_path = config.kb.as_ref().ok_or(PipelineError::MissingSetting("kb"))?;
    let kb = KnowledgeBase::load(kb_path)?;

    let corpus: Option<Corpus> = match &config.manifest {
        Some(manifest) => {
            let entries = read_manifest(manifest)?;
            Some(ingest_corpus(&entries, config.doc_mode)?)
        }
        None => None,
    };

    fs::create_dir_all(&config.out).map_err(|source| PipelineError::Write {
        path: config.out.clone(),
        source,
    })?;

    // Train on the manifest corpus unless a pre-trained file is given.
    let embeddings_path;
    let matrix = match &config.embeddings {
        Some(path) => {
            embeddings_path = path.clone();
            EmbeddingMatrix::load(path).map_err(PipelineError::Embeddings)?
        }
        None => {
            let corpus = corpus
                .as_ref()
                .ok_or(PipelineError::MissingSetting("manifest (or embeddings)"))?;
            let m = train_sgns(corpus, &config.train).map_err(PipelineError::Train)?;
            embeddings_path = config.out.join("embeddings.txt");
            m.save(&embeddings_path).map_err(PipelineError::Embeddings)?;
            m
        }
    };

    // Documents to expand: an explicit input file, or the manifest's notes.
    let targets: Vec<TokenizedDocument> = match &config.input {
        Some(path) => {
            let entries = vec![ManifestEntry {
                path: path.clone(),
                kind: SourceKind::ClinicalNote,
            }];
            ingest_corpus(&entries, DocMode::PerFile)?.documents
        }
        None => corpus
            .as_ref()
            .map(|c| {
                c.documents
                    .iter()
                    .filter(|d| d.source_kind == SourceKind::ClinicalNote)
                    .cloned()
                    .collect()
            })
            .unwrap_or_default(),
    };

    let ranker = RankerConfig::new(config.lambda, config.mode)?;

    let detections = config.out.join("detections.tsv");
    write_file(&detections, &detections_tsv_with(&targets, &kb, &config.detector))?;

    let expanded_dir = config.out.join("expanded");
    fs::create_dir_all(&expanded_dir).map_err(|source| PipelineError::Write {
        path: expanded_dir.clone(),
        source,
    })?;
    for doc in &targets {
        let rewritten = expand_document_with(doc, &kb, &matrix, &ranker, &config.detector);
        let path = expanded_dir.join(format!("{}.txt", sanitize_file_name(&doc.id)));
        write_file(&path, &rewritten)?;
    }

    let mut eval_report = None;
    let mut eval_tsv = None;
    let mut mode_comparison = None;
    if let Some(gold_path) = &config.gold {
        let gold = read_gold(gold_path)?;
        let report = evaluate_with(&targets, &kb, &matrix, &ranker, &gold, &config.detector)?;
        let report_path = config.out.join("eval.txt");
        write_file(&report_path, &report.render_text())?;
        let tsv_path = config.out.join("eval.tsv");
        write_file(&tsv_path, &report.render_tsv())?;
        eval_report = Some(report_path);
        eval_tsv = Some(tsv_path);

        let mut sources = vec![EmbeddingSource::Available {
            label: "task".to_string(),
            matrix: matrix.clone(),
        }];
        if let Some(path) = &config.general_embeddings {
            sources.push(match EmbeddingMatrix::load(path) {
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
        let cmp =
            compare_modes_with(&targets, &kb, &sources, &gold, config.lambda, &config.detector)?;
        let modes_path = config.out.join("modes.txt");
        write_file(&modes_path, &cmp.render_text())?;
        write_file(&config.out.join("modes.tsv"), &cmp.render_tsv())?;
        mode_comparison = Some(modes_path);
    }

    Ok(PipelineArtifacts {
        out_dir: config.out.clone(),
        embeddings: embeddings_path,
        detections,
        expanded_dir,
        eval_report,
        eval_tsv,
        mode_comparison,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn doc(text: &str) -> TokenizedDocument {
        TokenizedDocument::from_document(Document {
            id: "note".into(),
            source_kind: SourceKind::ClinicalNote,
            text: text.into(),
        })
    }

    #[test]
    fn expand_document_replaces_mentions_in_place() {
        let kb = KnowledgeBase::parse(
            "stat\timmediately\t60\n\
             tte\ttransthoracic echocardiogram\t40\n\
             c\tconsistent\t10\n\
             w\twith\t10\n",
        )
        .unwrap();
        let m = EmbeddingMatrix::empty(4);
        let cfg = RankerConfig::rating_only();
        let out = expand_document(&doc("STAT TTE c/w RVS."), &kb, &m, &cfg);
        assert_eq!(out, "immediately transthoracic echocardiogram consistent/with RVS.");
    }

    #[test]
    fn expand_document_keeps_unknown_mentions() {
        let kb = KnowledgeBase::parse("aki\tacute kidney injury\t4\n").unwrap();
        let m = EmbeddingMatrix::empty(4);
        let cfg = RankerConfig::rating_only();
        let out = expand_document(&doc("AKI - no CTA."), &kb, &m, &cfg);
        assert_eq!(out, "acute kidney injury - no CTA.");
    }

    #[test]
    fn missing_kb_named_in_error() {
        let config = PipelineConfig {
            kb: Some(PathBuf::from("/nonexistent/kb.tsv")),
            ..PipelineConfig::default()
        };
        let err = run_pipeline(&config).unwrap_err();
        assert!(err.to_string().starts_with("kb stage:"), "got: {err}");
        assert_ne!(err.exit_code(), 0);
    }

    #[test]
    fn unset_kb_is_a_usage_error() {
        let err = run_pipeline(&PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MissingSetting("kb")));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn detections_tsv_lists_in_kb_flags() {
        let kb = KnowledgeBase::parse("tte\ttransthoracic echocardiogram\t40\n").unwrap();
        let tsv = detections_tsv(&[doc("TTE then RVS")], &kb);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "note\t0\tTTE\ttrue");
        assert_eq!(lines[1], "note\t2\tRVS\tfalse");
    }
}
