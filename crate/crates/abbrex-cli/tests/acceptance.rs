//! Acceptance suite. One test per criterion; each prints a PASS line with
//! the measured numbers (run with `--nocapture` to see them).
//!
//! 1. worked-example scores at lambda=0.2 (0.65144 / 0.52136, +-1e-4)
//! 2. synthetic 50-abbreviation benchmark ordering
//! 3. gradient vs central finite differences (rel err < 1e-4, 100 cases)
//! 4. property suites incl. 1000-case brute-force re-scoring
//! 5. byte-identical seeded training + save/load round trip (<= 1e-6)
//! 6. OD ranking flip on the bundled corpus (rating vs combined)
//! 7. planted one-of-each error taxonomy

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use abbrex_core::corpus::{Corpus, Document, SourceKind, TokenizedDocument};
use abbrex_core::embedding::{cosine, train_sgns, EmbeddingMatrix, TrainConfig};
use abbrex_core::eval::{
    compare_modes, evaluate, EmbeddingSource, ErrorCategory, GoldAnnotation,
};
use abbrex_core::kb::{Candidate, KnowledgeBase};
use abbrex_core::rank::{rank_candidates, RankerConfig};
use abbrex_core::rng::Rng;
use abbrex_core::synth::{generate, BenchmarkConfig};

fn abbrex() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abbrex"))
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn tokenized(docs: &[Document]) -> Vec<TokenizedDocument> {
    docs.iter().cloned().map(TokenizedDocument::from_document).collect()
}

/// Criterion 1: the published worked example. Ratings {50, 7} and
/// similarities {0.595, 0.621} at lambda = 0.2 give scores 0.65144 and
/// 0.52136 (+-1e-4), and "congestive heart failure" ranks first even
/// though its similarity is lower.
#[test]
fn criterion_1_worked_example() {
    let kb = KnowledgeBase::parse(
        "chf\tcongestive heart failure\t50\nchf\tchronic heart failure\t7\n",
    )
    .unwrap();
    // the shared words sum to zero so each head word pins its phrase's
    // cosine against x(chf) = e1 exactly
    let y_cong = (1.0 - 0.595f64 * 0.595).sqrt();
    let y_chron = (1.0 - 0.621f64 * 0.621).sqrt();
    let matrix = EmbeddingMatrix::from_vectors(vec![
        ("chf".to_string(), vec![1.0, 0.0]),
        ("congestive".to_string(), vec![0.595, y_cong]),
        ("chronic".to_string(), vec![0.621, y_chron]),
        ("heart".to_string(), vec![0.25, -0.4]),
        ("failure".to_string(), vec![-0.25, 0.4]),
    ])
    .unwrap();

    let ranked = rank_candidates(
        "CHF",
        &kb,
        &matrix,
        &RankerConfig::combined(0.2).unwrap(),
    )
    .unwrap();

    // straight-line arithmetic for the expected values
    let expect_cong: f64 = 0.2 * (50.0 / 57.0) + 0.8 * 0.595;
    let expect_chron: f64 = 0.2 * (7.0 / 57.0) + 0.8 * 0.621;
    assert!((expect_cong - 0.65144).abs() < 1e-4);
    assert!((expect_chron - 0.52136).abs() < 1e-4);

    assert_eq!(ranked[0].candidate.phrase_text(), "congestive heart failure");
    assert!(
        (ranked[0].score - 0.65144).abs() < 1e-4,
        "congestive score {}",
        ranked[0].score
    );
    assert!(
        (ranked[1].score - 0.52136).abs() < 1e-4,
        "chronic score {}",
        ranked[1].score
    );
    println!(
        "ACCEPTANCE 1 (worked example): PASS scores {:.5}/{:.5}, congestive first",
        ranked[0].score, ranked[1].score
    );
}

/// Criterion 2: 50-abbreviation synthetic benchmark. Fixed seed, required
/// orderings: combined >= 0.90, rating-only <= 0.50 by construction, and
/// task-corpus embeddings strictly beat the mismatched general corpus.
#[test]
fn criterion_2_synthetic_benchmark() {
    let bench = generate(&BenchmarkConfig::default());
    assert_eq!(bench.gold.len(), 50);
    assert!(bench.gold_top_rated * 2 <= 50);

    let train_cfg = TrainConfig {
        epochs: 15,
        subsample_threshold: 0.0,
        seed: 7,
        ..TrainConfig::default()
    };
    let task = train_sgns(&Corpus::from_documents(bench.task_documents.clone()), &train_cfg)
        .unwrap();
    let general =
        train_sgns(&Corpus::from_documents(bench.general_documents.clone()), &train_cfg).unwrap();

    let docs = tokenized(&bench.test_documents);
    let sources = vec![
        EmbeddingSource::Available { label: "task".to_string(), matrix: task },
        EmbeddingSource::Available { label: "general".to_string(), matrix: general },
    ];
    let cmp = compare_modes(&docs, &bench.kb, &sources, &bench.gold, 0.2).unwrap();
    println!("{}", cmp.render_text());

    let acc = |label: &str| cmp.row(label).unwrap().accuracy().unwrap();
    let rating = acc("rating_only");
    let emb_task = acc("embedding_only (task)");
    let emb_general = acc("embedding_only (general)");
    let combined = acc("combined (lambda=0.2, task)");

    assert!(combined >= 0.90, "combined accuracy {combined} < 0.90");
    assert!(rating <= 0.50, "rating-only accuracy {rating} > 0.50");
    assert!(
        emb_task > emb_general,
        "task embeddings ({emb_task}) must strictly beat general ({emb_general})"
    );
    // the qualitative Table-1 ordering
    assert!(combined > emb_general && emb_general > rating);
    println!(
        "ACCEPTANCE 2 (synthetic benchmark): PASS combined={combined:.2} task={emb_task:.2} general={emb_general:.2} rating={rating:.2}"
    );
}

mod gradient_oracle {
    //! Self-contained finite-difference oracle for criterion 3.

    pub fn dot(u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn log_sigmoid(x: f64) -> f64 {
        -(1.0 + (-x).exp()).ln()
    }

    pub fn objective(
        input: &[f64],
        output: &[f64],
        dim: usize,
        center: usize,
        context: usize,
        negatives: &[usize],
    ) -> f64 {
        let v_c = &input[center * dim..(center + 1) * dim];
        let mut loss = log_sigmoid(dot(v_c, &output[context * dim..(context + 1) * dim]));
        for &n in negatives {
            loss += log_sigmoid(-dot(v_c, &output[n * dim..(n + 1) * dim]));
        }
        loss
    }
}

/// Criterion 3: analytic gradient vs central finite differences at
/// h = 1e-5 in double precision, relative error < 1e-4 over 100 cases.
#[test]
fn criterion_3_gradient_check() {
    let h = 1e-5;
    let tol = 1e-4;
    let mut worst: f64 = 0.0;

    for case in 0..100u64 {
        let mut rng = Rng::new(9000 + case);
        let dim = rng.range_inclusive(3, 8);
        let vocab = rng.range_inclusive(4, 10);
        let input: Vec<f64> = (0..vocab * dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let output: Vec<f64> = (0..vocab * dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let center = rng.below(vocab);
        let context = rng.below(vocab);
        let negatives: Vec<usize> =
            (0..rng.range_inclusive(1, 4)).map(|_| rng.below(vocab)).collect();

        let tokens: Vec<String> = (0..vocab).map(|i| format!("t{i}")).collect();
        let m = EmbeddingMatrix::from_training_state(tokens, dim, input.clone(), output.clone())
            .unwrap();
        let grad = m.sgns_gradient(center, context, &negatives).unwrap();

        let mut by_output_row: HashMap<usize, Vec<f64>> = HashMap::new();
        let add = |row: usize, g: &[f64], map: &mut HashMap<usize, Vec<f64>>| {
            let acc = map.entry(row).or_insert_with(|| vec![0.0; dim]);
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        };
        add(context, &grad.context, &mut by_output_row);
        for (i, &n) in negatives.iter().enumerate() {
            add(n, &grad.negatives[i], &mut by_output_row);
        }

        let mut check = |analytic: f64, numeric: f64, what: &str| {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(rel < tol, "case {case} {what}: {analytic} vs {numeric} (rel {rel})");
        };

        for k in 0..dim {
            let flat = center * dim + k;
            let mut plus = input.clone();
            plus[flat] += h;
            let mut minus = input.clone();
            minus[flat] -= h;
            let numeric = (gradient_oracle::objective(&plus, &output, dim, center, context, &negatives)
                - gradient_oracle::objective(&minus, &output, dim, center, context, &negatives))
                / (2.0 * h);
            check(grad.center[k], numeric, "center");
        }
        for (&row, analytic) in &by_output_row {
            for (k, &analytic_k) in analytic.iter().enumerate() {
                let flat = row * dim + k;
                let mut plus = output.clone();
                plus[flat] += h;
                let mut minus = output.clone();
                minus[flat] -= h;
                let numeric = (gradient_oracle::objective(&input, &plus, dim, center, context, &negatives)
                    - gradient_oracle::objective(&input, &minus, dim, center, context, &negatives))
                    / (2.0 * h);
                check(analytic_k, numeric, "output");
            }
        }
    }
    println!("ACCEPTANCE 3 (gradient check): PASS worst relative error {worst:.3e} over 100 cases");
}

/// Criterion 4: property suites. Permutation invariance of the phrase sum,
/// cosine scale invariance, ranker mode equivalence against sort oracles,
/// rating normalization, error-category partition, and >= 1000 randomized
/// brute-force re-scorings of candidate lists with <= 6 entries.
#[test]
fn criterion_4_property_suites() {
    let mut rng = Rng::new(31337);
    let pool = ["apple", "brook", "cedar", "delta", "ember", "frost", "grove", "helix"];

    // -- 1000-case brute-force re-scoring oracle --
    let mut brute_cases = 0;
    for _ in 0..1000 {
        let dim = 3;
        // vectors for a random subset of the pool
        let mut vectors: Vec<(String, Vec<f64>)> = Vec::new();
        for w in pool {
            if rng.next_f64() < 0.7 {
                vectors.push((w.to_string(), (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect()));
            }
        }
        let abbrev_in_vocab = rng.next_f64() < 0.8;
        let abbrev_vec: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        if abbrev_in_vocab {
            vectors.push(("xy".to_string(), abbrev_vec.clone()));
        }
        let matrix = if vectors.is_empty() {
            EmbeddingMatrix::empty(dim)
        } else {
            EmbeddingMatrix::from_vectors(vectors.clone()).unwrap()
        };

        // up to 6 unique candidate phrases
        let mut kb = KnowledgeBase::new();
        let mut phrases: Vec<(Vec<String>, u32)> = Vec::new();
        let n_cand = rng.range_inclusive(1, 6);
        for _ in 0..n_cand {
            let len = rng.range_inclusive(1, 3);
            let words: Vec<String> =
                (0..len).map(|_| pool[rng.below(pool.len())].to_string()).collect();
            let rating = rng.below(50) as u32;
            if phrases.iter().all(|(w, _)| *w != words) {
                phrases.push((words.clone(), rating));
                kb.insert("XY", Candidate::new(&words.join(" "), rating));
            }
        }
        let lambda = rng.next_f64();

        // straight-line oracle
        let total: u64 = phrases.iter().map(|(_, r)| *r as u64).sum();
        let mut expected: Vec<(f64, u32, String)> = phrases
            .iter()
            .map(|(words, rating)| {
                let rating_term = if total == 0 {
                    1.0 / phrases.len() as f64
                } else {
                    *rating as f64 / total as f64
                };
                let mut phrase_vec: Option<Vec<f64>> = None;
                for w in words {
                    if let Some((_, v)) = vectors.iter().find(|(t, _)| t == w) {
                        phrase_vec = Some(match phrase_vec {
                            None => v.clone(),
                            Some(acc) => acc.iter().zip(v).map(|(a, b)| a + b).collect(),
                        });
                    }
                }
                let cos = match (&phrase_vec, abbrev_in_vocab) {
                    (Some(c), true) => {
                        let d = gradient_oracle::dot(&abbrev_vec, c);
                        let na = gradient_oracle::dot(&abbrev_vec, &abbrev_vec).sqrt();
                        let nc = gradient_oracle::dot(c, c).sqrt();
                        if na == 0.0 || nc == 0.0 { 0.0 } else { d / (na * nc) }
                    }
                    _ => 0.0,
                };
                (lambda * rating_term + (1.0 - lambda) * cos, *rating, words.join(" "))
            })
            .collect();
        expected.sort_by(|a, b| {
            b.0.total_cmp(&a.0).then_with(|| b.1.cmp(&a.1)).then_with(|| a.2.cmp(&b.2))
        });
        let expected_order: Vec<String> = expected.into_iter().map(|(_, _, p)| p).collect();

        let got: Vec<String> =
            rank_candidates("XY", &kb, &matrix, &RankerConfig::combined(lambda).unwrap())
                .unwrap()
                .into_iter()
                .map(|r| r.candidate.phrase_text())
                .collect();
        assert_eq!(got, expected_order, "brute-force mismatch");
        brute_cases += 1;
    }
    assert!(brute_cases >= 1000);

    // -- permutation invariance of the phrase sum --
    let matrix = EmbeddingMatrix::from_vectors(
        pool.iter()
            .enumerate()
            .map(|(i, w)| (w.to_string(), vec![i as f64 * 0.13 - 0.4, 0.7, -0.2 * i as f64]))
            .collect(),
    )
    .unwrap();
    for _ in 0..200 {
        let len = rng.range_inclusive(1, 6);
        let words: Vec<&str> = (0..len).map(|_| pool[rng.below(pool.len())]).collect();
        let mut shuffled = words.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.below(i + 1));
        }
        let (a, b) = (matrix.embed_phrase(&words).unwrap(), matrix.embed_phrase(&shuffled).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    // -- cosine positive-scale invariance --
    for _ in 0..200 {
        let u: Vec<f64> = (0..4).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let alpha = rng.uniform(0.01, 40.0);
        let beta = rng.uniform(0.01, 40.0);
        let su: Vec<f64> = u.iter().map(|x| x * alpha).collect();
        let sv: Vec<f64> = v.iter().map(|x| x * beta).collect();
        assert!((cosine(&u, &v) - cosine(&su, &sv)).abs() < 1e-9);
    }

    // -- mode equivalence vs sort oracles --
    for _ in 0..200 {
        let mut kb = KnowledgeBase::new();
        let n = rng.range_inclusive(2, 6);
        let mut phrases = Vec::new();
        for i in 0..n {
            let rating = rng.below(30) as u32;
            let phrase = format!("{} option{i}", pool[rng.below(pool.len())]);
            kb.insert("XY", Candidate::new(&phrase, rating));
            phrases.push((phrase, rating));
        }
        let ranked = rank_candidates("XY", &kb, &matrix, &RankerConfig::rating_only()).unwrap();
        let mut by_rating = phrases.clone();
        by_rating.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let got: Vec<String> = ranked.iter().map(|r| r.candidate.phrase_text()).collect();
        let want: Vec<String> = by_rating.into_iter().map(|(p, _)| p).collect();
        assert_eq!(got, want, "rating_only must equal a plain rating sort");

        let ranked =
            rank_candidates("XY", &kb, &matrix, &RankerConfig::embedding_only()).unwrap();
        for pair in ranked.windows(2) {
            assert!(pair[0].cosine_term >= pair[1].cosine_term - 1e-12);
            assert_eq!(pair[0].score, pair[0].cosine_term);
        }
    }

    // -- rating normalization sums to 1 or falls back to uniform --
    for _ in 0..200 {
        let n = rng.range_inclusive(1, 10);
        let all_zero = rng.next_f64() < 0.3;
        let candidates: Vec<Candidate> = (0..n)
            .map(|i| {
                let r = if all_zero { 0 } else { rng.below(100) as u32 };
                Candidate::new(&format!("p{i}"), r)
            })
            .collect();
        let terms = abbrex_core::normalize_ratings(&candidates);
        let total: u64 = candidates.iter().map(|c| c.rating as u64).sum();
        if total == 0 {
            for t in &terms {
                assert!((t - 1.0 / n as f64).abs() < 1e-12);
            }
        } else {
            assert!((terms.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    // -- error categories partition the incorrect set --
    for seed in 0..5 {
        let bench = generate(&BenchmarkConfig {
            abbreviations: 12,
            seed: 100 + seed,
            ..BenchmarkConfig::default()
        });
        let docs = tokenized(&bench.test_documents);
        let report = evaluate(
            &docs,
            &bench.kb,
            &EmbeddingMatrix::empty(4),
            &RankerConfig::rating_only(),
            &bench.gold,
        )
        .unwrap();
        let categorized: usize = report.error_counts.values().sum();
        assert_eq!(categorized, report.total - report.correct);
    }

    println!("ACCEPTANCE 4 (property suites): PASS incl. {brute_cases} brute-force cases");
}

/// Criterion 5: `train --seed 7 --workers 1` twice gives byte-identical
/// embedding files, and a save/load round trip preserves vectors to 1e-6.
#[test]
fn criterion_5_determinism_and_round_trip() {
    let data = data_dir();
    let run = |dir: &Path| {
        let status = abbrex()
            .args(["train", "--manifest"])
            .arg(data.join("manifest.tsv"))
            .args([
                "--doc-mode", "per-line", "--epochs", "12", "--subsample", "0", "--seed", "7",
                "--workers", "1", "--out",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(dir.join("embeddings.txt")).unwrap()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let bytes_a = run(a.path());
    let bytes_b = run(b.path());
    assert_eq!(bytes_a, bytes_b, "same seed must give byte-identical files");

    let loaded = EmbeddingMatrix::load(&a.path().join("embeddings.txt")).unwrap();
    let reloaded_path = a.path().join("again.txt");
    loaded.save(&reloaded_path).unwrap();
    let reloaded = EmbeddingMatrix::load(&reloaded_path).unwrap();
    assert_eq!(loaded.len(), reloaded.len());
    for token in loaded.vocab().tokens() {
        let (u, v) = (loaded.embed_word(token).unwrap(), reloaded.embed_word(token).unwrap());
        for (x, y) in u.iter().zip(v) {
            assert!((x - y).abs() <= 1e-6, "{token}: {x} vs {y}");
        }
    }
    println!(
        "ACCEPTANCE 5 (determinism): PASS {} identical bytes; round trip exact",
        bytes_a.len()
    );
}

/// Criterion 6: on the bundled KB, `rank --abbrev OD` puts "out-of-date"
/// first in rating-only mode and "overdose" first in combined mode after
/// training on the bundled task-oriented corpus.
#[test]
fn criterion_6_od_ranking_flip() {
    let data = data_dir();
    let dir = tempfile::tempdir().unwrap();
    let status = abbrex()
        .args(["train", "--manifest"])
        .arg(data.join("manifest.tsv"))
        .args([
            "--doc-mode", "per-line", "--epochs", "40", "--subsample", "0", "--seed", "7",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let embeddings = dir.path().join("embeddings.txt");

    let top_phrase = |mode: &str| -> String {
        let out = abbrex()
            .args(["rank", "--abbrev", "OD", "--mode", mode, "--kb"])
            .arg(data.join("kb.tsv"))
            .arg("--embeddings")
            .arg(&embeddings)
            .args(["--lambda", "0.2"])
            .output()
            .unwrap();
        assert!(out.status.success());
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        stdout.lines().next().unwrap().split('\t').next().unwrap().to_string()
    };

    let rating_top = top_phrase("rating_only");
    let combined_top = top_phrase("combined");
    assert_eq!(rating_top, "out-of-date");
    assert_eq!(combined_top, "overdose");
    println!("ACCEPTANCE 6 (OD ranking): PASS rating_only={rating_top}, combined={combined_top}");
}

/// Criterion 7: a constructed gold set with one planted error of each type
/// classifies as exactly one out-of-vocabulary, one lack-of-training-
/// samples and one unidentified representation.
#[test]
fn criterion_7_error_taxonomy() {
    let kb = KnowledgeBase::parse(
        "aa\tgood thing\t5\n\
         aa\tbad thing\t9\n\
         cc\tcorrect choice\t9\n\
         cc\twrong choice\t2\n",
    )
    .unwrap();
    let docs: Vec<TokenizedDocument> = tokenized(&[
        Document {
            id: "d1".into(),
            source_kind: SourceKind::ClinicalNote,
            // gold "good thing" sits at rank 2 behind "bad thing"
            text: "AA is mentioned".into(),
        },
        Document {
            id: "d2".into(),
            source_kind: SourceKind::ClinicalNote,
            // BB is detected (abbreviation shape) but has no KB entry
            text: "BB is mentioned".into(),
        },
        Document {
            id: "d3".into(),
            source_kind: SourceKind::ClinicalNote,
            // qq is never detected: lowercase, not a KB key
            text: "qq is mentioned".into(),
        },
        Document {
            id: "d4".into(),
            source_kind: SourceKind::ClinicalNote,
            text: "CC is mentioned".into(),
        },
    ]);
    let gold = vec![
        GoldAnnotation {
            doc_id: "d1".into(),
            abbrev: "AA".into(),
            occurrence_index: 0,
            gold_expansion: "good thing".into(),
        },
        GoldAnnotation {
            doc_id: "d2".into(),
            abbrev: "BB".into(),
            occurrence_index: 0,
            gold_expansion: "some expansion".into(),
        },
        GoldAnnotation {
            doc_id: "d3".into(),
            abbrev: "qq".into(),
            occurrence_index: 0,
            gold_expansion: "quiet quorum".into(),
        },
        GoldAnnotation {
            doc_id: "d4".into(),
            abbrev: "CC".into(),
            occurrence_index: 0,
            gold_expansion: "correct choice".into(),
        },
    ];
    let report = evaluate(
        &docs,
        &kb,
        &EmbeddingMatrix::empty(4),
        &RankerConfig::rating_only(),
        &gold,
    )
    .unwrap();
    assert_eq!(report.total, 4);
    assert_eq!(report.correct, 1);
    assert_eq!(report.error_counts[&ErrorCategory::OutOfVocabulary], 1);
    assert_eq!(report.error_counts[&ErrorCategory::LackOfTrainingSamples], 1);
    assert_eq!(report.error_counts[&ErrorCategory::UnidentifiedRepresentation], 1);
    println!("ACCEPTANCE 7 (error taxonomy): PASS one error in each category");
}
