//! Local knowledge base of abbreviation expansions with popularity ratings.
//!
//! Stands in for an online acronym dictionary: each abbreviation maps to an
//! ordered list of candidate expansion phrases, each carrying a non-negative
//! vote count used as a context-independent prior during ranking.
//!
//! File format (UTF-8 TSV): `abbrev<TAB>expansion phrase<TAB>rating` per row,
//! `#` comment lines and blank lines ignored. A missing rating defaults to 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// One candidate expansion: the phrase as a list of lowercase words plus its
/// popularity rating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub phrase: Vec<String>,
    pub rating: u32,
}

impl Candidate {
    pub fn new(phrase_text: &str, rating: u32) -> Candidate {
        Candidate {
            phrase: phrase_text
                .split_whitespace()
                .map(|w| w.to_lowercase())
                .collect(),
            rating,
        }
    }

    /// The phrase joined back on single spaces.
    pub fn phrase_text(&self) -> String {
        self.phrase.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbEntry {
    pub abbrev: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    entries: BTreeMap<String, KbEntry>,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("path not found: {path}")]
    PathNotFound { path: PathBuf },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("kb row {line}: expected `abbrev<TAB>expansion<TAB>rating`, got {row:?}")]
    MalformedRow { line: usize, row: String },
    #[error("kb row {line}: negative rating {value}")]
    NegativeRating { line: usize, value: i64 },
    #[error("kb row {line}: rating {value:?} is not an integer")]
    BadRating { line: usize, value: String },
    #[error("kb row {line}: empty {what}")]
    EmptyField { line: usize, what: &'static str },
}

/// Abbreviation keys are case-insensitive and ignore trailing periods, so
/// `chf.`, `CHF` and `Chf` all hit the same entry.
pub fn normalize_key(abbrev: &str) -> String {
    abbrev.trim_end_matches('.').to_uppercase()
}

impl KnowledgeBase {
    pub fn new() -> KnowledgeBase {
        KnowledgeBase::default()
    }

    pub fn load(path: &Path) -> Result<KnowledgeBase, KbError> {
        if !path.exists() {
            return Err(KbError::PathNotFound {
                path: path.to_owned(),
            });
        }
        let text = fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.to_owned(),
            source,
        })?;
        KnowledgeBase::parse(&text)
    }

    pub fn parse(text: &str) -> Result<KnowledgeBase, KbError> {
        let mut kb = KnowledgeBase::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(KbError::MalformedRow {
                    line: lineno + 1,
                    row: line.to_string(),
                });
            }
            let abbrev = fields[0].trim();
            let phrase = fields[1].trim();
            if abbrev.is_empty() {
                return Err(KbError::EmptyField { line: lineno + 1, what: "abbreviation" });
            }
            if phrase.is_empty() {
                return Err(KbError::EmptyField { line: lineno + 1, what: "expansion phrase" });
            }
            let rating = match fields.get(2).map(|s| s.trim()) {
                None | Some("") => 0,
                Some(s) => {
                    let value: i64 = s.parse().map_err(|_| KbError::BadRating {
                        line: lineno + 1,
                        value: s.to_string(),
                    })?;
                    if value < 0 {
                        return Err(KbError::NegativeRating { line: lineno + 1, value });
                    }
                    u32::try_from(value).map_err(|_| KbError::BadRating {
                        line: lineno + 1,
                        value: s.to_string(),
                    })?
                }
            };
            kb.insert(abbrev, Candidate::new(phrase, rating));
        }
        Ok(kb)
    }

    /// Add one candidate. Duplicate (abbrev, phrase) pairs collapse, keeping
    /// the maximum rating; candidate order is first-seen.
    pub fn insert(&mut self, abbrev: &str, candidate: Candidate) {
        let key = normalize_key(abbrev);
        let entry = self.entries.entry(key.clone()).or_insert_with(|| KbEntry {
            abbrev: key,
            candidates: Vec::new(),
        });
        if let Some(existing) = entry
            .candidates
            .iter_mut()
            .find(|c| c.phrase == candidate.phrase)
        {
            existing.rating = existing.rating.max(candidate.rating);
        } else {
            entry.candidates.push(candidate);
        }
    }

    /// Candidate list for an abbreviation, or `None` when it is unknown.
    /// Never returns an empty list.
    pub fn candidates_for(&self, abbrev: &str) -> Option<&[Candidate]> {
        self.entries
            .get(&normalize_key(abbrev))
            .map(|e| e.candidates.as_slice())
    }

    pub fn contains(&self, abbrev: &str) -> bool {
        self.entries.contains_key(&normalize_key(abbrev))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &KbEntry> {
        self.entries.values()
    }

    /// Serialize back to the TSV format. `parse(to_tsv(kb)) == kb`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for entry in self.entries.values() {
            for c in &entry.candidates {
                writeln!(out, "{}\t{}\t{}", entry.abbrev, c.phrase_text(), c.rating).unwrap();
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_tsv())
    }
}
