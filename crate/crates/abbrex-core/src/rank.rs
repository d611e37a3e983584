//! Candidate ranking: a lambda-weighted blend of knowledge-base popularity
//! and embedding similarity.
//!
//! For abbreviation `b` with candidate list `l(b)`, each candidate `c`
//! scores
//!
//! ```text
//! score(c) = lambda * rating(c) / sum_rating(l(b))
//!          + (1 - lambda) * cos(x(b), x(c))
//! ```
//!
//! with `x(c)` the additive phrase vector. `rating_only` pins lambda to 1
//! and `embedding_only` to 0, which are the two baseline modes.

use thiserror::Error;

use crate::embedding::{cosine, EmbeddingMatrix};
use crate::kb::{Candidate, KnowledgeBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankerMode {
    Combined,
    RatingOnly,
    EmbeddingOnly,
}

impl RankerMode {
    pub fn parse(s: &str) -> Option<RankerMode> {
        match s {
            "combined" => Some(RankerMode::Combined),
            "rating_only" | "rating-only" => Some(RankerMode::RatingOnly),
            "embedding_only" | "embedding-only" => Some(RankerMode::EmbeddingOnly),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RankerMode::Combined => "combined",
            RankerMode::RatingOnly => "rating_only",
            RankerMode::EmbeddingOnly => "embedding_only",
        }
    }
}

#[derive(Debug, Error)]
pub enum RankError {
    #[error("lambda must be in [0, 1], got {0}")]
    LambdaOutOfRange(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct RankerConfig {
    lambda: f64,
    mode: RankerMode,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            lambda: 0.2,
            mode: RankerMode::Combined,
        }
    }
}

impl RankerConfig {
    pub fn new(lambda: f64, mode: RankerMode) -> Result<RankerConfig, RankError> {
        if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
            return Err(RankError::LambdaOutOfRange(lambda));
        }
        Ok(RankerConfig { lambda, mode })
    }

    pub fn combined(lambda: f64) -> Result<RankerConfig, RankError> {
        RankerConfig::new(lambda, RankerMode::Combined)
    }

    pub fn rating_only() -> RankerConfig {
        RankerConfig { lambda: 1.0, mode: RankerMode::RatingOnly }
    }

    pub fn embedding_only() -> RankerConfig {
        RankerConfig { lambda: 0.0, mode: RankerMode::EmbeddingOnly }
    }

    pub fn mode(&self) -> RankerMode {
        self.mode
    }

    /// The lambda actually applied: forced to 1 or 0 by the baseline modes.
    pub fn effective_lambda(&self) -> f64 {
        match self.mode {
            RankerMode::Combined => self.lambda,
            RankerMode::RatingOnly => 1.0,
            RankerMode::EmbeddingOnly => 0.0,
        }
    }
}

/// One scored candidate. `score = lambda * rating_term +
/// (1 - lambda) * cosine_term` exactly as computed.
#[derive(Debug, Clone)]
pub struct RankedExpansion {
    pub candidate: Candidate,
    pub rating_term: f64,
    pub cosine_term: f64,
    pub score: f64,
}

/// Rating mass normalized over the candidate list. Sums to 1; an all-zero
/// list falls back to uniform terms so the similarity term decides alone.
pub fn normalize_ratings(candidates: &[Candidate]) -> Vec<f64> {
    assert!(!candidates.is_empty(), "normalize_ratings requires candidates");
    let total: u64 = candidates.iter().map(|c| c.rating as u64).sum();
    if total == 0 {
        let uniform = 1.0 / candidates.len() as f64;
        return vec![uniform; candidates.len()];
    }
    candidates
        .iter()
        .map(|c| c.rating as f64 / total as f64)
        .collect()
}

/// Score one candidate against the abbreviation vector. A missing
/// abbreviation vector or a fully out-of-vocabulary phrase contributes a
/// cosine term of 0, degrading gracefully to rating-scaled scoring.
pub fn score_candidate(
    abbrev_vector: Option<&[f64]>,
    candidate: &Candidate,
    rating_term: f64,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
) -> RankedExpansion {
    debug_assert!((0.0..=1.0).contains(&rating_term));
    let cosine_term = match (abbrev_vector, matrix.embed_phrase(&candidate.phrase)) {
        (Some(b), Some(c)) => cosine(b, &c),
        _ => 0.0,
    };
    let lambda = cfg.effective_lambda();
    RankedExpansion {
        candidate: candidate.clone(),
        rating_term,
        cosine_term,
        score: lambda * rating_term + (1.0 - lambda) * cosine_term,
    }
}

/// Normalize an abbreviation surface into its embedding query token: same
/// trailing-period strip as KB keys, then the training case-fold.
pub fn abbrev_query_token(abbrev: &str) -> String {
    abbrev.trim_end_matches('.').to_lowercase()
}

/// Rank every known expansion of `abbrev`, best first. `None` when the
/// abbreviation is not in the knowledge base. The top element is the
/// system's expansion.
pub fn rank_candidates(
    abbrev: &str,
    kb: &KnowledgeBase,
    matrix: &EmbeddingMatrix,
    cfg: &RankerConfig,
) -> Option<Vec<RankedExpansion>> {
    let candidates = kb.candidates_for(abbrev)?;
    let rating_terms = normalize_ratings(candidates);
    let abbrev_vector = matrix.embed_word(&abbrev_query_token(abbrev));
    let mut ranked: Vec<RankedExpansion> = candidates
        .iter()
        .zip(&rating_terms)
        .map(|(c, &r)| score_candidate(abbrev_vector, c, r, matrix, cfg))
        .collect();
    sort_ranked(&mut ranked);
    Some(ranked)
}

/// Sort by score descending; ties broken by higher rating, then by
/// lexicographically smaller phrase, so rankings are deterministic.
pub(crate) fn sort_ranked(ranked: &mut [RankedExpansion]) {
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.candidate.rating.cmp(&a.candidate.rating))
            .then_with(|| a.candidate.phrase.cmp(&b.candidate.phrase))
    });
}
