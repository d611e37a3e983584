//! Word embeddings: vocabulary, skip-gram training, serialization, phrase
//! composition and cosine similarity.

mod io;
mod train;
mod vocab;

pub use train::{train_sgns, SgnsGradient, TrainConfig};
pub use vocab::Vocab;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no tokens with frequency >= {min_count}")]
    EmptyVocab { min_count: u32 },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("corpus smaller than one training window: no (center, context) pairs")]
    CorpusTooSmall,
    #[error("vocab index {index} out of range (vocab size {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("matrix carries no output vectors (only present during training)")]
    NoOutputVectors,
    #[error("vector for {token:?} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        token: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate token {token:?}")]
    DuplicateToken { token: String },
    #[error("cannot build an embedding matrix with no vectors")]
    NoVectors,
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

/// Vocabulary plus dense vectors. The input (center-word) vectors are the
/// embeddings used downstream; output vectors exist only on freshly trained
/// matrices and are dropped by serialization.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    vocab: Vocab,
    dim: usize,
    input: Vec<f64>,
    output: Option<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub(crate) fn from_parts(
        vocab: Vocab,
        dim: usize,
        input: Vec<f64>,
        output: Option<Vec<f64>>,
    ) -> EmbeddingMatrix {
        debug_assert_eq!(input.len(), vocab.len() * dim);
        EmbeddingMatrix {
            vocab,
            dim,
            input,
            output,
        }
    }

    /// A matrix with no vocabulary: every lookup misses, so all cosine
    /// terms are 0. Lets rating-only ranking run without an embedding file.
    pub fn empty(dim: usize) -> EmbeddingMatrix {
        assert!(dim > 0);
        EmbeddingMatrix::from_parts(Vocab::from_tokens(Vec::new()), dim, Vec::new(), None)
    }

    /// A matrix with explicit input *and* output vectors, as mid-training
    /// state would hold. Used by gradient tooling and tests.
    pub fn from_training_state(
        tokens: Vec<String>,
        dim: usize,
        input: Vec<f64>,
        output: Vec<f64>,
    ) -> Result<EmbeddingMatrix, EmbeddingError> {
        if dim == 0 || tokens.is_empty() {
            return Err(EmbeddingError::NoVectors);
        }
        for (name, values) in [("input", &input), ("output", &output)] {
            if values.len() != tokens.len() * dim {
                return Err(EmbeddingError::DimensionMismatch {
                    token: name.to_string(),
                    expected: tokens.len() * dim,
                    got: values.len(),
                });
            }
        }
        Ok(EmbeddingMatrix::from_parts(
            Vocab::from_tokens(tokens),
            dim,
            input,
            Some(output),
        ))
    }

    /// Build a matrix directly from (token, vector) pairs. Tokens are
    /// case-folded the same way training folds them.
    pub fn from_vectors(entries: Vec<(String, Vec<f64>)>) -> Result<EmbeddingMatrix, EmbeddingError> {
        let Some(first) = entries.first() else {
            return Err(EmbeddingError::NoVectors);
        };
        let dim = first.1.len();
        if dim == 0 {
            return Err(EmbeddingError::NoVectors);
        }
        let mut tokens = Vec::with_capacity(entries.len());
        let mut input = Vec::with_capacity(entries.len() * dim);
        let mut seen = std::collections::HashSet::new();
        for (token, vector) in entries {
            let folded = token.to_lowercase();
            if vector.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    token: folded,
                    expected: dim,
                    got: vector.len(),
                });
            }
            if !seen.insert(folded.clone()) {
                return Err(EmbeddingError::DuplicateToken { token: folded });
            }
            tokens.push(folded);
            input.extend_from_slice(&vector);
        }
        Ok(EmbeddingMatrix::from_parts(
            Vocab::from_tokens(tokens),
            dim,
            input,
            None,
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.input[idx * self.dim..(idx + 1) * self.dim]
    }

    pub(crate) fn output_row(&self, idx: usize) -> Option<&[f64]> {
        self.output
            .as_ref()
            .map(|o| &o[idx * self.dim..(idx + 1) * self.dim])
    }

    pub(crate) fn has_output(&self) -> bool {
        self.output.is_some()
    }

    /// Look up a word vector. Queries are case-folded with the same rule
    /// used during training, so `Care` and `care` resolve identically.
    pub fn embed_word(&self, token: &str) -> Option<&[f64]> {
        let idx = self.vocab.index_of(&token.to_lowercase())?;
        Some(self.row(idx))
    }

    /// Compose a phrase vector by summing its word vectors. Words missing
    /// from the vocabulary are skipped; if none are present the phrase has
    /// no vector. Panics on an empty word list (caller contract).
    pub fn embed_phrase<S: AsRef<str>>(&self, words: &[S]) -> Option<Vec<f64>> {
        assert!(!words.is_empty(), "embed_phrase requires a non-empty word list");
        let mut sum: Option<Vec<f64>> = None;
        for word in words {
            if let Some(v) = self.embed_word(word.as_ref()) {
                match &mut sum {
                    Some(acc) => {
                        for (a, b) in acc.iter_mut().zip(v) {
                            *a += b;
                        }
                    }
                    None => sum = Some(v.to_vec()),
                }
            }
        }
        sum
    }
}

/// Cosine similarity in [-1, 1]. Zero-norm vectors compare as 0 so that
/// untrained or absent compositions fall back to rating-only scoring.
/// Panics if the dimensions differ.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "cosine: dimension mismatch");
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    dot / (nu.sqrt() * nv.sqrt())
}
