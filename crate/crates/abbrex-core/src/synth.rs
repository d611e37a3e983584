//! Deterministic synthetic benchmark generation.
//!
//! Builds a self-contained evaluation setup: a knowledge base of invented
//! abbreviations with rated candidate expansions, a task-oriented corpus in
//! which each gold expansion shares its context distribution with its
//! abbreviation, a mismatched "general" corpus in which half the
//! abbreviations are used in a different sense, test notes, and gold
//! annotations.
//!
//! Construction guarantees:
//! * every abbreviation has 3-6 candidates with distinct ratings;
//! * the gold candidate is top-rated for fewer than half the entries, so a
//!   rating-only ranker cannot beat that fraction;
//! * in the task corpus the abbreviation and its gold expansion words occur
//!   in the same contexts, while decoy expansions live in their own;
//! * in the general corpus the abbreviation keeps its gold contexts for
//!   only half the entries and adopts a decoy's contexts for the rest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::corpus::{Document, SourceKind};
use crate::eval::GoldAnnotation;
use crate::kb::{Candidate, KnowledgeBase};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub abbreviations: usize,
    pub seed: u64,
    /// Sentences pairing each abbreviation with its context words.
    pub notes_per_abbrev: usize,
    /// Sentences pairing each gold expansion with the same context words.
    pub articles_per_abbrev: usize,
    /// Sentences per decoy candidate in its own context island.
    pub decoy_sentences: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            abbreviations: 50,
            seed: 7,
            notes_per_abbrev: 30,
            articles_per_abbrev: 30,
            decoy_sentences: 8,
        }
    }
}

#[derive(Debug)]
pub struct Benchmark {
    pub kb: KnowledgeBase,
    pub task_documents: Vec<Document>,
    pub general_documents: Vec<Document>,
    pub test_documents: Vec<Document>,
    pub gold: Vec<GoldAnnotation>,
    /// Entries whose gold candidate carries the top rating.
    pub gold_top_rated: usize,
    /// Entries the general corpus associates with a wrong sense.
    pub flipped_in_general: usize,
}

/// Paths produced by [`Benchmark::write_to_dir`].
#[derive(Debug, Clone)]
pub struct BenchmarkPaths {
    pub kb: PathBuf,
    pub task_manifest: PathBuf,
    pub general_manifest: PathBuf,
    pub test_notes: PathBuf,
    pub gold: PathBuf,
}

const FILLER: [&str; 10] = [
    "patient", "admitted", "course", "stable", "plan", "continue", "monitor", "overnight",
    "today", "status",
];

fn abbrev_code(i: usize) -> String {
    let hi = (b'A' + (i / 26) as u8) as char;
    let lo = (b'A' + (i % 26) as u8) as char;
    format!("Q{hi}{lo}")
}

fn pick<'a>(rng: &mut Rng, words: &'a [String]) -> &'a str {
    &words[rng.below(words.len())]
}

/// context .. [filler] target-words context ..
fn sentence(rng: &mut Rng, ctx: &[String], targets: &[&str]) -> String {
    let mut words: Vec<String> = Vec::with_capacity(targets.len() + 5);
    words.push(pick(rng, ctx).to_string());
    words.push(pick(rng, ctx).to_string());
    if rng.next_f64() < 0.4 {
        words.push(FILLER[rng.below(FILLER.len())].to_string());
    }
    for t in targets {
        words.push(t.to_string());
    }
    words.push(pick(rng, ctx).to_string());
    if rng.next_f64() < 0.6 {
        words.push(pick(rng, ctx).to_string());
    }
    words.join(" ")
}

fn distinct_ratings(rng: &mut Rng, n: usize) -> Vec<u32> {
    let mut ratings = Vec::with_capacity(n);
    while ratings.len() < n {
        let r = rng.range_inclusive(1, 99) as u32;
        if !ratings.contains(&r) {
            ratings.push(r);
        }
    }
    ratings.sort_unstable_by(|a, b| b.cmp(a));
    ratings
}

pub fn generate(cfg: &BenchmarkConfig) -> Benchmark {
    assert!(cfg.abbreviations >= 1 && cfg.abbreviations <= 676);
    let mut rng = Rng::new(cfg.seed);
    let mut kb = KnowledgeBase::new();
    let mut task_lines: Vec<String> = Vec::new();
    let mut general_lines: Vec<String> = Vec::new();
    let mut test_lines: Vec<String> = Vec::new();
    let mut gold = Vec::new();
    let mut gold_top_rated = 0;
    let mut flipped_in_general = 0;

    for i in 0..cfg.abbreviations {
        let code = abbrev_code(i);
        let code_lower = code.to_lowercase();

        let ctx: Vec<String> = (0..6).map(|k| format!("w{i}c{k}")).collect();
        let gold_words = [format!("g{i}a"), format!("g{i}b")];
        let gold_phrase = gold_words.join(" ");

        let n_decoys = rng.range_inclusive(2, 5);
        let decoys: Vec<[String; 2]> = (0..n_decoys)
            .map(|j| [format!("d{i}x{j}a"), format!("d{i}x{j}b")])
            .collect();
        let decoy_ctx: Vec<Vec<String>> = (0..n_decoys)
            .map(|j| (0..3).map(|k| format!("e{i}x{j}c{k}")).collect())
            .collect();

        // Ratings: gold is top-rated only for 2 entries in every 5.
        let gold_is_top = i % 5 < 2;
        if gold_is_top {
            gold_top_rated += 1;
        }
        let ratings = distinct_ratings(&mut rng, n_decoys + 1);
        let (gold_rating, decoy_ratings): (u32, Vec<u32>) = if gold_is_top {
            (ratings[0], ratings[1..].to_vec())
        } else {
            // the strongest decoy outranks gold
            (ratings[1], {
                let mut r = vec![ratings[0]];
                r.extend_from_slice(&ratings[2..]);
                r
            })
        };

        // Insert candidates in rotating order so the gold phrase is not
        // always the first row of an entry.
        let mut rows: Vec<(String, u32)> = vec![(gold_phrase.clone(), gold_rating)];
        for (d, &r) in decoys.iter().zip(&decoy_ratings) {
            rows.push((d.join(" "), r));
        }
        let shift = i % rows.len();
        rows.rotate_left(shift);
        for (phrase, rating) in &rows {
            kb.insert(&code, Candidate::new(phrase, *rating));
        }

        // Task corpus: the abbreviation and the gold words share contexts.
        for _ in 0..cfg.notes_per_abbrev {
            task_lines.push(sentence(&mut rng, &ctx, &[&code_lower]));
        }
        for _ in 0..cfg.articles_per_abbrev {
            let refs: Vec<&str> = gold_words.iter().map(|s| s.as_str()).collect();
            task_lines.push(sentence(&mut rng, &ctx, &refs));
        }
        for (j, d) in decoys.iter().enumerate() {
            for _ in 0..cfg.decoy_sentences {
                let refs: Vec<&str> = d.iter().map(|s| s.as_str()).collect();
                task_lines.push(sentence(&mut rng, &decoy_ctx[j], &refs));
            }
        }

        // General corpus: same articles, but the abbreviation itself flips
        // to the strongest decoy's sense for every other entry.
        let flipped = i % 2 == 1;
        if flipped {
            flipped_in_general += 1;
        }
        let general_ctx: &[String] = if flipped { &decoy_ctx[0] } else { &ctx };
        for _ in 0..cfg.notes_per_abbrev {
            general_lines.push(sentence(&mut rng, general_ctx, &[&code_lower]));
        }
        for _ in 0..cfg.articles_per_abbrev {
            let refs: Vec<&str> = gold_words.iter().map(|s| s.as_str()).collect();
            general_lines.push(sentence(&mut rng, &ctx, &refs));
        }
        for (j, d) in decoys.iter().enumerate() {
            for _ in 0..cfg.decoy_sentences {
                let refs: Vec<&str> = d.iter().map(|s| s.as_str()).collect();
                general_lines.push(sentence(&mut rng, &decoy_ctx[j], &refs));
            }
        }

        // Test note and its gold annotation. The ids match what per-line
        // ingestion of the written file produces.
        let line_no = test_lines.len() + 1;
        test_lines.push(format!(
            "{} {} {} {}",
            code,
            pick(&mut rng, &ctx),
            pick(&mut rng, &ctx),
            pick(&mut rng, &ctx)
        ));
        gold.push(GoldAnnotation {
            doc_id: format!("bench_notes:{line_no}"),
            abbrev: code.clone(),
            occurrence_index: 0,
            gold_expansion: gold_phrase,
        });
    }

    let to_docs = |lines: &[String], stem: &str, kind: SourceKind| -> Vec<Document> {
        lines
            .iter()
            .enumerate()
            .map(|(n, text)| Document {
                id: format!("{stem}:{}", n + 1),
                source_kind: kind,
                text: text.clone(),
            })
            .collect()
    };

    Benchmark {
        kb,
        task_documents: to_docs(&task_lines, "task", SourceKind::CandidateArticle),
        general_documents: to_docs(&general_lines, "general", SourceKind::ReferenceText),
        test_documents: to_docs(&test_lines, "bench_notes", SourceKind::ClinicalNote),
        gold,
        gold_top_rated,
        flipped_in_general,
    }
}

impl Benchmark {
    /// Write the benchmark as files: KB TSV, per-line corpus files with
    /// manifests, test notes and gold TSV.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<BenchmarkPaths> {
        fs::create_dir_all(dir)?;
        let kb_path = dir.join("kb.tsv");
        self.kb.save(&kb_path)?;

        let write_lines = |name: &str, docs: &[Document]| -> io::Result<PathBuf> {
            let path = dir.join(name);
            let text: String = docs.iter().map(|d| format!("{}\n", d.text)).collect();
            fs::write(&path, text)?;
            Ok(path)
        };
        write_lines("task.txt", &self.task_documents)?;
        write_lines("general.txt", &self.general_documents)?;
        let test_notes = write_lines("bench_notes.txt", &self.test_documents)?;

        let task_manifest = dir.join("task_manifest.tsv");
        fs::write(
            &task_manifest,
            "task.txt\tcandidate_article\nbench_notes.txt\tclinical_note\n",
        )?;
        let general_manifest = dir.join("general_manifest.tsv");
        fs::write(
            &general_manifest,
            "general.txt\treference_text\nbench_notes.txt\tclinical_note\n",
        )?;

        let gold_path = dir.join("gold.tsv");
        let gold_text: String = self
            .gold
            .iter()
            .map(|g| {
                format!(
                    "{}\t{}\t{}\t{}\n",
                    g.doc_id, g.abbrev, g.occurrence_index, g.gold_expansion
                )
            })
            .collect();
        fs::write(&gold_path, gold_text)?;

        Ok(BenchmarkPaths {
            kb: kb_path,
            task_manifest,
            general_manifest,
            test_notes,
            gold: gold_path,
        })
    }
}
