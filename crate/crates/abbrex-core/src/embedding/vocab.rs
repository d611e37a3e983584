//! Training vocabulary with frequency counts.

use std::collections::HashMap;

use crate::corpus::Corpus;

use super::EmbeddingError;

/// Bijective token/index mapping. Indices are assigned by descending
/// frequency with ties broken alphabetically, so vocabulary construction is
/// deterministic for a given corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u32,
    total_count: u64,
}

impl Vocab {
    /// Count the corpus embedding-token stream and keep tokens occurring at
    /// least `min_count` times.
    pub fn build(corpus: &Corpus, min_count: u32) -> Result<Vocab, EmbeddingError> {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in &corpus.documents {
            for token in doc.embedding_tokens() {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Err(EmbeddingError::EmptyCorpus);
        }
        let mut retained: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count as u64)
            .collect();
        if retained.is_empty() {
            return Err(EmbeddingError::EmptyVocab { min_count });
        }
        retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Vocab::from_counted(retained, min_count))
    }

    /// A vocabulary with unknown frequencies, e.g. from a loaded embedding
    /// file. Token order is preserved.
    pub fn from_tokens(tokens: Vec<String>) -> Vocab {
        Vocab::from_counted(tokens.into_iter().map(|t| (t, 0)).collect(), 0)
    }

    fn from_counted(pairs: Vec<(String, u64)>, min_count: u32) -> Vocab {
        let mut tokens = Vec::with_capacity(pairs.len());
        let mut counts = Vec::with_capacity(pairs.len());
        let mut index = HashMap::with_capacity(pairs.len());
        let mut total = 0;
        for (i, (token, count)) in pairs.into_iter().enumerate() {
            index.insert(token.clone(), i);
            tokens.push(token);
            counts.push(count);
            total += count;
        }
        Vocab {
            tokens,
            counts,
            index,
            min_count,
            total_count: total,
        }
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Total occurrences of all retained tokens.
    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    #[cfg(test)]
    pub(crate) fn from_counted_for_tests(pairs: Vec<(String, u64)>) -> Vocab {
        Vocab::from_counted(pairs, 0)
    }
}
