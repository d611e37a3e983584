//! Corpus assembly: clinical notes plus task-oriented resources (candidate
//! articles, papers, textbooks) loaded into one tokenized corpus.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::tokenize::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKind {
    ClinicalNote,
    CandidateArticle,
    ReferenceText,
}

impl SourceKind {
    pub fn parse(s: &str) -> Option<SourceKind> {
        match s {
            "clinical_note" => Some(SourceKind::ClinicalNote),
            "candidate_article" => Some(SourceKind::CandidateArticle),
            "reference_text" => Some(SourceKind::ReferenceText),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SourceKind::ClinicalNote => "clinical_note",
            SourceKind::CandidateArticle => "candidate_article",
            SourceKind::ReferenceText => "reference_text",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One input unit of text. `id` is unique within a corpus and `text` is
/// non-empty after trimming.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub source_kind: SourceKind,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct TokenizedDocument {
    pub id: String,
    pub source_kind: SourceKind,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl TokenizedDocument {
    pub fn from_document(doc: Document) -> Self {
        let tokens = tokenize(&doc.text);
        TokenizedDocument {
            id: doc.id,
            source_kind: doc.source_kind,
            text: doc.text,
            tokens,
        }
    }

    /// Token stream used for embedding training: punctuation dropped,
    /// everything else case-folded (abbreviations included).
    pub fn embedding_tokens(&self) -> impl Iterator<Item = String> + '_ {
        self.tokens
            .iter()
            .filter(|t| t.kind != TokenKind::Punct)
            .map(|t| t.surface.to_lowercase())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<TokenizedDocument>,
}

#[derive(Debug, Clone, Default)]
pub struct KindStats {
    pub documents: usize,
    pub tokens: usize,
}

impl Corpus {
    pub fn from_documents(docs: Vec<Document>) -> Corpus {
        Corpus {
            documents: docs.into_iter().map(TokenizedDocument::from_document).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Document and token counts per source kind.
    pub fn stats(&self) -> BTreeMap<SourceKind, KindStats> {
        let mut stats: BTreeMap<SourceKind, KindStats> = BTreeMap::new();
        for doc in &self.documents {
            let entry = stats.entry(doc.source_kind).or_default();
            entry.documents += 1;
            entry.tokens += doc.tokens.len();
        }
        stats
    }
}

/// Whether each file is one document or one document per line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocMode {
    PerFile,
    PerLine,
}

impl DocMode {
    pub fn parse(s: &str) -> Option<DocMode> {
        match s {
            "per-file" | "per_file" => Some(DocMode::PerFile),
            "per-line" | "per_line" => Some(DocMode::PerLine),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub kind: SourceKind,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("path not found: {path}")]
    PathNotFound { path: PathBuf },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8: invalid byte at offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("{path}:{line}: malformed manifest row (expected `path<TAB>source_kind`)")]
    MalformedManifestRow { path: PathBuf, line: usize },
    #[error("{path}:{line}: unknown source kind {kind:?}")]
    UnknownSourceKind {
        path: PathBuf,
        line: usize,
        kind: String,
    },
}

/// Parse a corpus manifest: one `path<TAB>source_kind` row per line, `#`
/// starts a comment. Relative paths resolve against the manifest location.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, IngestError> {
    let text = read_utf8(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(p), Some(kind_str)) = (fields.next(), fields.next()) else {
            return Err(IngestError::MalformedManifestRow {
                path: path.to_owned(),
                line: lineno + 1,
            });
        };
        let kind = SourceKind::parse(kind_str.trim()).ok_or_else(|| {
            IngestError::UnknownSourceKind {
                path: path.to_owned(),
                line: lineno + 1,
                kind: kind_str.trim().to_string(),
            }
        })?;
        let entry_path = PathBuf::from(p.trim());
        let resolved = if entry_path.is_absolute() {
            entry_path
        } else {
            base.join(entry_path)
        };
        entries.push(ManifestEntry {
            path: resolved,
            kind,
        });
    }
    Ok(entries)
}

fn read_utf8(path: &Path) -> Result<String, IngestError> {
    if !path.exists() {
        return Err(IngestError::PathNotFound {
            path: path.to_owned(),
        });
    }
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|e| IngestError::InvalidUtf8 {
        path: path.to_owned(),
        offset: e.utf8_error().valid_up_to(),
    })
}

fn doc_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Load and tokenize every manifest entry, in input order. Blank units are
/// skipped so every document ends up non-empty.
pub fn ingest_corpus(entries: &[ManifestEntry], mode: DocMode) -> Result<Corpus, IngestError> {
    let mut documents = Vec::new();
    let mut seen_ids: BTreeMap<String, usize> = BTreeMap::new();

    for entry in entries {
        let text = read_utf8(&entry.path)?;
        let stem = doc_stem(&entry.path);
        match mode {
            DocMode::PerFile => {
                if text.trim().is_empty() {
                    continue;
                }
                documents.push(Document {
                    id: unique_id(&mut seen_ids, stem),
                    source_kind: entry.kind,
                    text,
                });
            }
            DocMode::PerLine => {
                for (lineno, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    documents.push(Document {
                        id: unique_id(&mut seen_ids, format!("{}:{}", stem, lineno + 1)),
                        source_kind: entry.kind,
                        text: line.to_string(),
                    });
                }
            }
        }
    }
    Ok(Corpus::from_documents(documents))
}

fn unique_id(seen: &mut BTreeMap<String, usize>, base: String) -> String {
    let n = seen.entry(base.clone()).or_insert(0);
    *n += 1;
    if *n == 1 {
        base
    } else {
        format!("{}-{}", base, *n)
    }
}
