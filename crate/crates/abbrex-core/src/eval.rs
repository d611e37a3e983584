//! Accuracy evaluation against gold expansions, with the three-way error
//! taxonomy and a mode-comparison report.
//!
//! A prediction is correct iff it string-equals the gold expansion after
//! lowercasing and whitespace normalization; no synonym credit. Incorrect
//! mentions fall into exactly one of three categories:
//!
//! * `unidentified_representation` - the detector never produced a mention
//!   for the gold slot;
//! * `out_of_vocabulary` - detected, but the abbreviation (or one compound
//!   component) has no candidate list containing the gold phrase;
//! * `lack_of_training_samples` - the gold phrase was in the candidate
//!   list but was not ranked first.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::TokenizedDocument;
use crate::detect::{detect_with, AbbrevMention, DetectorConfig};
use crate::embedding::EmbeddingMatrix;
use crate::kb::KnowledgeBase;
use crate::rank::{rank_candidates, RankerConfig};

/// One hand-labeled expansion: the `occurrence_index`-th time (0-based)
/// this surface appears in the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldAnnotation {
    pub doc_id: String,
    pub abbrev: String,
    pub occurrence_index: usize,
    pub gold_expansion: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorCategory {
    OutOfVocabulary,
    LackOfTrainingSamples,
    UnidentifiedRepresentation,
}

impl ErrorCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCategory::OutOfVocabulary => "out_of_vocabulary",
            ErrorCategory::LackOfTrainingSamples => "lack_of_training_samples",
            ErrorCategory::UnidentifiedRepresentation => "unidentified_representation",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty gold set")]
    EmptyGold,
    #[error("path not found: {path}")]
    PathNotFound { path: PathBuf },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("gold row {line}: {msg}")]
    GoldFormat { line: usize, msg: String },
    #[error("no embedding sources given")]
    NoEmbeddingSources,
}

/// Parse a gold TSV: `doc_id<TAB>abbrev<TAB>occurrence_index<TAB>expansion`
/// per row, `#` comments and blank lines ignored.
pub fn parse_gold(text: &str) -> Result<Vec<GoldAnnotation>, EvalError> {
    let mut gold = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(EvalError::GoldFormat {
                line: lineno + 1,
                msg: format!("expected 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let occurrence_index: usize = fields[2].trim().parse().map_err(|_| EvalError::GoldFormat {
            line: lineno + 1,
            msg: format!("bad occurrence index {:?}", fields[2]),
        })?;
        let gold_expansion = fields[3].trim();
        if gold_expansion.is_empty() {
            return Err(EvalError::GoldFormat {
                line: lineno + 1,
                msg: "empty gold expansion".to_string(),
            });
        }
        gold.push(GoldAnnotation {
            doc_id: fields[0].trim().to_string(),
            abbrev: fields[1].trim().to_string(),
            occurrence_index,
            gold_expansion: gold_expansion.to_string(),
        });
    }
    Ok(gold)
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldAnnotation>, EvalError> {
    if !path.exists() {
        return Err(EvalError::PathNotFound {
            path: path.to_owned(),
        });
    }
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_gold(&text)
}

/// Lowercase and collapse whitespace; the only normalization applied before
/// the exact-match comparison.
pub fn normalize_phrase(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The system's expansion for one detected mention. `expansion` is `None`
/// when no component had any candidate list.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub mention: AbbrevMention,
    pub expansion: Option<String>,
}

/// Predictions keyed by (doc_id, surface, occurrence index). A gold slot
/// missing from the set means the detector produced no mention for it.
#[derive(Debug, Clone, Default)]
pub struct PredictionSet {
    map: BTreeMap<(String, String, usize), Prediction>,
}

impl PredictionSet {
    pub fn insert(&mut self, doc_id: &str, surface: &str, occurrence: usize, pred: Prediction) {
        self.map
            .insert((doc_id.to_string(), surface.to_string(), occurrence), pred);
    }

    pub fn get(&self, doc_id: &str, surface: &str, occurrence: usize) -> Option<&Prediction> {
        self.map
            .get(&(doc_id.to_string(), surface.to_string(), occurrence))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String, usize), &Prediction)> {
        self.map.iter()
    }
}

/// Detect and expand every mention in the given documents: each component
/// takes the top-ranked candidate, compound components are rejoined with
/// `/`, and unresolved components keep their surface form.
pub fn predict_documents(
    docs: &[TokenizedDocument],
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
) -> PredictionSet {
    predict_documents_with(docs, kb, matrix, cfg, &DetectorConfig::default())
}

pub fn predict_documents_with(
    docs: &[TokenizedDocument],
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
    detector: &DetectorConfig,
) -> PredictionSet {
    let mut set = PredictionSet::default();
    for doc in docs {
        let mut occurrence: BTreeMap<String, usize> = BTreeMap::new();
        for mention in detect_with(doc, kb, detector) {
            let slot = occurrence.entry(mention.surface.clone()).or_insert(0);
            let occ = *slot;
            *slot += 1;
            let expansion = expand_mention(&mention, kb, matrix, cfg);
            let surface = mention.surface.clone();
            set.insert(&doc.id, &surface, occ, Prediction { mention, expansion });
        }
    }
    set
}

/// Top-1 expansion of a mention, component-wise for slash compounds.
pub fn expand_mention(
    mention: &AbbrevMention,
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
) -> Option<String> {
    let mut any_resolved = false;
    let parts: Vec<String> = mention
        .components
        .iter()
        .map(|component| {
            match rank_candidates(component, kb, matrix, cfg) {
                Some(ranked) => {
                    any_resolved = true;
                    ranked[0].candidate.phrase_text()
                }
                None => component.clone(),
            }
        })
        .collect();
    any_resolved.then(|| parts.join("/"))
}

/// The outcome of matching one gold annotation against the predictions.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub gold: GoldAnnotation,
    pub prediction: Option<String>,
    pub mention: Option<AbbrevMention>,
    pub correct: bool,
}

/// Full evaluation report: accuracy plus the error-category distribution.
/// The categories partition the incorrect set, so their counts sum to
/// `total - correct`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub error_counts: BTreeMap<ErrorCategory, usize>,
    /// Per-component stats over slash-compound mentions; a compound counts
    /// as one (all-or-nothing) mention in `correct`, these track partial
    /// component hits.
    pub compound_components_total: usize,
    pub compound_components_correct: usize,
}

/// Score predictions against gold and classify every miss.
pub fn evaluate_accuracy(
    predictions: &PredictionSet,
    gold: &[GoldAnnotation],
    kb: &KnowledgeBase,
) -> Result<EvalReport, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let outcomes: Vec<Outcome> = gold
        .iter()
        .map(|g| {
            let pred = predictions.get(&g.doc_id, &g.abbrev, g.occurrence_index);
            let prediction = pred.and_then(|p| p.expansion.clone());
            let correct = prediction
                .as_deref()
                .is_some_and(|p| normalize_phrase(p) == normalize_phrase(&g.gold_expansion));
            Outcome {
                gold: g.clone(),
                prediction,
                mention: pred.map(|p| p.mention.clone()),
                correct,
            }
        })
        .collect();
    Ok(build_report(&outcomes, kb))
}

fn build_report(outcomes: &[Outcome], kb: &KnowledgeBase) -> EvalReport {
    let total = outcomes.len();
    let correct = outcomes.iter().filter(|o| o.correct).count();
    let mut error_counts: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    let mut comp_total = 0;
    let mut comp_correct = 0;

    for outcome in outcomes {
        if let Some(mention) = &outcome.mention {
            if mention.components.len() > 1 {
                let gold_parts: Vec<&str> = outcome.gold.gold_expansion.split('/').collect();
                if gold_parts.len() == mention.components.len() {
                    comp_total += gold_parts.len();
                    if let Some(pred) = &outcome.prediction {
                        let pred_parts: Vec<&str> = pred.split('/').collect();
                        if pred_parts.len() == gold_parts.len() {
                            comp_correct += pred_parts
                                .iter()
                                .zip(&gold_parts)
                                .filter(|(p, g)| {
                                    normalize_phrase(p) == normalize_phrase(g)
                                })
                                .count();
                        }
                    }
                }
            }
        }
        if !outcome.correct {
            let category = classify_error(
                &outcome.gold,
                outcome.mention.as_ref(),
                kb,
                outcome.prediction.as_deref(),
            );
            *error_counts.entry(category).or_insert(0) += 1;
        }
    }

    EvalReport {
        total,
        correct,
        accuracy: correct as f64 / total as f64,
        error_counts,
        compound_components_total: comp_total,
        compound_components_correct: comp_correct,
    }
}

/// Assign the error category for one incorrect prediction. Panics when
/// called on a correct one (caller contract).
pub fn classify_error(
    gold: &GoldAnnotation,
    mention: Option<&AbbrevMention>,
    kb: &KnowledgeBase,
    prediction: Option<&str>,
) -> ErrorCategory {
    assert!(
        prediction.is_none_or(|p| normalize_phrase(p) != normalize_phrase(&gold.gold_expansion)),
        "classify_error called on a correct prediction"
    );
    let Some(mention) = mention else {
        return ErrorCategory::UnidentifiedRepresentation;
    };

    // For compounds the gold splits positionally on '/'.
    let gold_parts: Vec<String> = if mention.components.len() > 1 {
        gold.gold_expansion.split('/').map(normalize_phrase).collect()
    } else {
        vec![normalize_phrase(&gold.gold_expansion)]
    };
    if gold_parts.len() != mention.components.len() {
        return ErrorCategory::OutOfVocabulary;
    }
    for (component, gold_part) in mention.components.iter().zip(&gold_parts) {
        let Some(candidates) = kb.candidates_for(component) else {
            return ErrorCategory::OutOfVocabulary;
        };
        let in_list = candidates
            .iter()
            .any(|c| normalize_phrase(&c.phrase_text()) == *gold_part);
        if !in_list {
            return ErrorCategory::OutOfVocabulary;
        }
    }
    ErrorCategory::LackOfTrainingSamples
}

/// End-to-end evaluation: detect, rank and score against gold.
pub fn evaluate(
    docs: &[TokenizedDocument],
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
    gold: &[GoldAnnotation],
) -> Result<EvalReport, EvalError> {
    evaluate_with(docs, kb, matrix, cfg, gold, &DetectorConfig::default())
}

pub fn evaluate_with(
    docs: &[TokenizedDocument],
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
    gold: &[GoldAnnotation],
    detector: &DetectorConfig,
) -> Result<EvalReport, EvalError> {
    let predictions = predict_documents_with(docs, kb, matrix, cfg, detector);
    evaluate_accuracy(&predictions, gold, kb)
}

/// One named embedding matrix for the mode comparison; files that failed
/// to load become `Unavailable` rows instead of aborting the rest.
pub enum EmbeddingSource {
    Available { label: String, matrix: EmbeddingMatrix },
    Unavailable { label: String, reason: String },
}

impl EmbeddingSource {
    pub fn label(&self) -> &str {
        match self {
            EmbeddingSource::Available { label, .. } => label,
            EmbeddingSource::Unavailable { label, .. } => label,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeRow {
    pub label: String,
    pub report: Option<EvalReport>,
    pub note: Option<String>,
}

impl ModeRow {
    pub fn accuracy(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.accuracy)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ModeComparison {
    pub rows: Vec<ModeRow>,
}

impl ModeComparison {
    pub fn row(&self, label: &str) -> Option<&ModeRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Run the rating-only baseline, an embedding-only pass per source, and
/// the combined ranker (first available source) over one gold set.
pub fn compare_modes(
    docs: &[TokenizedDocument],
    kb: &KnowledgeBase,
    sources: &[EmbeddingSource],
    gold: &[GoldAnnotation],
    lambda: f64,
) -> Result<ModeComparison, EvalError> {
    compare_modes_with(docs, kb, sources, gold, lambda, &DetectorConfig::default())
}

pub fn compare_modes_with(
    docs: &[TokenizedDocument],
    kb: &KnowledgeBase,
    sources: &[EmbeddingSource],
    gold: &[GoldAnnotation],
    lambda: f64,
    detector: &DetectorConfig,
) -> Result<ModeComparison, EvalError> {
    if sources.is_empty() {
        return Err(EvalError::NoEmbeddingSources);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut rows = Vec::new();

    let no_vectors = EmbeddingMatrix::empty(1);
    rows.push(ModeRow {
        label: "rating_only".to_string(),
        report: Some(evaluate_with(
            docs,
            kb,
            &no_vectors,
            &RankerConfig::rating_only(),
            gold,
            detector,
        )?),
        note: None,
    });

    for source in sources {
        match source {
            EmbeddingSource::Available { label, matrix } => {
                let report = evaluate_with(
                    docs,
                    kb,
                    matrix,
                    &RankerConfig::embedding_only(),
                    gold,
                    detector,
                )?;
                rows.push(ModeRow {
                    label: format!("embedding_only ({label})"),
                    report: Some(report),
                    note: None,
                });
            }
            EmbeddingSource::Unavailable { label, reason } => {
                rows.push(ModeRow {
                    label: format!("embedding_only ({label})"),
                    report: None,
                    note: Some(format!("unavailable: {reason}")),
                });
            }
        }
    }

    let primary = sources.iter().find_map(|s| match s {
        EmbeddingSource::Available { label, matrix } => Some((label, matrix)),
        EmbeddingSource::Unavailable { .. } => None,
    });
    match primary {
        Some((label, matrix)) => {
            let cfg = RankerConfig::combined(lambda)
                .unwrap_or_else(|_| RankerConfig::default());
            rows.push(ModeRow {
                label: format!("combined (lambda={lambda}, {label})"),
                report: Some(evaluate_with(docs, kb, matrix, &cfg, gold, detector)?),
                note: None,
            });
        }
        None => rows.push(ModeRow {
            label: format!("combined (lambda={lambda})"),
            report: None,
            note: Some("unavailable: no embedding source loaded".to_string()),
        }),
    }

    Ok(ModeComparison { rows })
}

impl EvalReport {
    /// Human-readable aligned report.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "total       {:>8}", self.total).unwrap();
        writeln!(out, "correct     {:>8}", self.correct).unwrap();
        writeln!(out, "accuracy    {:>8.4}", self.accuracy).unwrap();
        let incorrect = self.total - self.correct;
        writeln!(out, "incorrect   {:>8}", incorrect).unwrap();
        for cat in [
            ErrorCategory::OutOfVocabulary,
            ErrorCategory::LackOfTrainingSamples,
            ErrorCategory::UnidentifiedRepresentation,
        ] {
            let count = self.error_counts.get(&cat).copied().unwrap_or(0);
            writeln!(out, "  {:<28} {:>5}", cat.as_str(), count).unwrap();
        }
        if self.compound_components_total > 0 {
            writeln!(
                out,
                "compound components {}/{} correct",
                self.compound_components_correct, self.compound_components_total
            )
            .unwrap();
        }
        out
    }

    /// Machine-readable TSV rows.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "total\t{}", self.total).unwrap();
        writeln!(out, "correct\t{}", self.correct).unwrap();
        writeln!(out, "accuracy\t{:.6}", self.accuracy).unwrap();
        for (cat, count) in &self.error_counts {
            writeln!(out, "error\t{}\t{}", cat.as_str(), count).unwrap();
        }
        writeln!(out, "compound_components_total\t{}", self.compound_components_total).unwrap();
        writeln!(
            out,
            "compound_components_correct\t{}",
            self.compound_components_correct
        )
        .unwrap();
        out
    }
}

impl ModeComparison {
    pub fn render_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(10)
            .max(10);
        let mut out = String::new();
        writeln!(out, "{:<width$}  accuracy", "approach", width = width).unwrap();
        for row in &self.rows {
            match (&row.report, &row.note) {
                (Some(report), _) => {
                    writeln!(out, "{:<width$}  {:>8.4}", row.label, report.accuracy, width = width)
                        .unwrap()
                }
                (None, Some(note)) => {
                    writeln!(out, "{:<width$}  {}", row.label, note, width = width).unwrap()
                }
                (None, None) => writeln!(out, "{:<width$}  -", row.label, width = width).unwrap(),
            }
        }
        out
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            match &row.report {
                Some(report) => {
                    writeln!(out, "mode\t{}\t{:.6}", row.label, report.accuracy).unwrap()
                }
                None => writeln!(
                    out,
                    "mode\t{}\t{}",
                    row.label,
                    row.note.as_deref().unwrap_or("-")
                )
                .unwrap(),
            }
        }
        out
    }
}
