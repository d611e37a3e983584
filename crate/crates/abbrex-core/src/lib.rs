//! Abbreviation expansion for clinical free text.
//!
//! Ambiguous shorthand like `STAT TTE c/w RVS` gets normalized into full
//! phrases by (1) detecting abbreviation-shaped tokens, (2) pulling
//! candidate expansions from a local knowledge base with popularity
//! ratings, (3) training word embeddings on a task-oriented corpus where
//! the expansions occur in natural contexts, and (4) ranking candidates
//! with a lambda-weighted blend of rating mass and cosine similarity
//! between the abbreviation vector and the additive phrase vector.
//!
//! The crate is organized along that pipeline:
//!
//! * [`tokenize`] / [`corpus`] - tokenizer and corpus ingestion
//! * [`kb`] - knowledge base of rated candidate expansions
//! * [`detect`] - abbreviation mention detection and slash-compound splits
//! * [`embedding`] - vocabulary, skip-gram training, serialization
//! * [`rank`] - candidate scoring and ranking
//! * [`eval`] - accuracy, error taxonomy, mode comparison
//! * [`synth`] - deterministic synthetic benchmark generation
//! * [`config`] / [`pipeline`] - config file handling and the end-to-end run

pub mod config;
pub mod corpus;
pub mod detect;
pub mod embedding;
pub mod eval;
pub mod kb;
pub mod pipeline;
pub mod rank;
pub mod rng;
pub mod synth;
pub mod tokenize;

pub use corpus::{ingest_corpus, read_manifest, Corpus, DocMode, Document, SourceKind};
pub use detect::{detect, expand_slash_compound, AbbrevMention};
pub use embedding::{cosine, train_sgns, EmbeddingMatrix, TrainConfig, Vocab};
pub use eval::{
    classify_error, compare_modes, evaluate, evaluate_accuracy, ErrorCategory, EvalReport,
    GoldAnnotation,
};
pub use kb::{Candidate, KbEntry, KnowledgeBase};
pub use rank::{normalize_ratings, rank_candidates, RankedExpansion, RankerConfig, RankerMode};
pub use tokenize::{tokenize, Token, TokenKind};
