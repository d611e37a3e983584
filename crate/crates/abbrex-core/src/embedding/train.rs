//! Skip-gram with negative sampling.
//!
//! For a (center, context) pair with sampled noise words n_1..n_k the
//! objective is
//!
//! ```text
//! L = log sigma(u_o . v_c) + sum_i log sigma(-u_ni . v_c)
//! ```
//!
//! where `v` rows are input (center) vectors and `u` rows output vectors.
//! Updates follow the gradient of L with the current learning rate.
//!
//! With `workers = 1` training is fully sequential and bit-reproducible for
//! a fixed seed. With more workers, rows are updated hogwild-style (racy,
//! last-write-wins); the result is only statistically equivalent.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::corpus::Corpus;
use crate::rng::Rng;

use super::vocab::Vocab;
use super::{EmbeddingError, EmbeddingMatrix};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub min_count: u32,
    pub subsample_threshold: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_learning_rate: 0.025,
            min_count: 2,
            subsample_threshold: 1e-3,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        fn bad(msg: &str) -> Result<(), EmbeddingError> {
            Err(EmbeddingError::InvalidConfig(msg.to_string()))
        }
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !self.initial_learning_rate.is_finite() || self.initial_learning_rate <= 0.0 {
            return bad("learning rate must be positive");
        }
        if !self.subsample_threshold.is_finite() || self.subsample_threshold < 0.0 {
            return bad("subsample threshold must be >= 0");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        Ok(())
    }
}

/// Gradient of the pair objective for every touched row. When an index
/// appears more than once (e.g. a negative equal to the context), the total
/// gradient for that row is the sum of its entries here.
#[derive(Debug, Clone)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl EmbeddingMatrix {
    /// Analytic gradient of the skip-gram objective for one training pair.
    /// Exposed as a unit so it can be checked against finite differences.
    pub fn sgns_gradient(
        &self,
        center: usize,
        context: usize,
        negatives: &[usize],
    ) -> Result<SgnsGradient, EmbeddingError> {
        if !self.has_output() {
            return Err(EmbeddingError::NoOutputVectors);
        }
        let size = self.len();
        for &idx in [center, context].iter().chain(negatives) {
            if idx >= size {
                return Err(EmbeddingError::IndexOutOfRange { index: idx, size });
            }
        }
        let v_c = self.row(center);
        let u_o = self.output_row(context).unwrap();

        let mut center_grad = vec![0.0; self.dim()];
        let g_pos = 1.0 - sigmoid(dot(v_c, u_o));
        for (acc, &u) in center_grad.iter_mut().zip(u_o) {
            *acc += g_pos * u;
        }
        let context_grad: Vec<f64> = v_c.iter().map(|&v| g_pos * v).collect();

        let mut negative_grads = Vec::with_capacity(negatives.len());
        for &n in negatives {
            let u_n = self.output_row(n).unwrap();
            let g_neg = -sigmoid(dot(v_c, u_n));
            for (acc, &u) in center_grad.iter_mut().zip(u_n) {
                *acc += g_neg * u;
            }
            negative_grads.push(v_c.iter().map(|&v| g_neg * v).collect());
        }

        Ok(SgnsGradient {
            center: center_grad,
            context: context_grad,
            negatives: negative_grads,
        })
    }
}

/// Dense matrix shared across training workers. Reads and writes are
/// relaxed atomics over the f64 bit patterns; concurrent row updates may
/// race, which the training contract allows for `workers > 1`.
struct SharedMatrix {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedMatrix {
    fn zeros(rows: usize, dim: usize) -> SharedMatrix {
        SharedMatrix {
            dim,
            cells: (0..rows * dim).map(|_| AtomicU64::new(0f64.to_bits())).collect(),
        }
    }

    fn from_values(values: Vec<f64>, dim: usize) -> SharedMatrix {
        SharedMatrix {
            dim,
            cells: values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    fn load_row(&self, row: usize, buf: &mut [f64]) {
        let base = row * self.dim;
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = f64::from_bits(self.cells[base + k].load(Ordering::Relaxed));
        }
    }

    /// row += scale * delta
    fn add_scaled(&self, row: usize, scale: f64, delta: &[f64]) {
        let base = row * self.dim;
        for (k, &d) in delta.iter().enumerate() {
            let cell = &self.cells[base + k];
            let cur = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((cur + scale * d).to_bits(), Ordering::Relaxed);
        }
    }

    fn into_values(self) -> Vec<f64> {
        self.cells
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect()
    }
}

/// Cumulative unigram^0.75 table for drawing negative samples.
struct NegativeTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl NegativeTable {
    fn new(vocab: &Vocab) -> NegativeTable {
        let mut cumulative = Vec::with_capacity(vocab.len());
        let mut total = 0.0;
        for &c in vocab.counts() {
            total += (c as f64).powf(0.75);
            cumulative.push(total);
        }
        NegativeTable { cumulative, total }
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        let r = rng.next_f64() * self.total;
        let idx = self.cumulative.partition_point(|&x| x <= r);
        idx.min(self.cumulative.len() - 1)
    }
}

fn keep_probability(count: u64, total: u64, threshold: f64) -> f64 {
    if threshold <= 0.0 {
        return 1.0;
    }
    let frequency = count as f64 / total as f64;
    let ratio = threshold / frequency;
    ratio.sqrt() + ratio
}

struct PairBuffers {
    center: Vec<f64>,
    other: Vec<f64>,
    center_grad: Vec<f64>,
}

impl PairBuffers {
    fn new(dim: usize) -> PairBuffers {
        PairBuffers {
            center: vec![0.0; dim],
            other: vec![0.0; dim],
            center_grad: vec![0.0; dim],
        }
    }
}

/// One gradient step on a (center, context) pair plus sampled negatives.
/// Same math as `sgns_gradient`, applied in place with learning rate `lr`;
/// the agreement is pinned by a unit test below.
#[allow(clippy::too_many_arguments)]
fn train_pair(
    input: &SharedMatrix,
    output: &SharedMatrix,
    table: &NegativeTable,
    center: usize,
    context: usize,
    negatives: usize,
    lr: f64,
    rng: &mut Rng,
    bufs: &mut PairBuffers,
) {
    input.load_row(center, &mut bufs.center);
    bufs.center_grad.iter_mut().for_each(|x| *x = 0.0);

    output.load_row(context, &mut bufs.other);
    let g = (1.0 - sigmoid(dot(&bufs.center, &bufs.other))) * lr;
    for (acc, &u) in bufs.center_grad.iter_mut().zip(&bufs.other) {
        *acc += g * u;
    }
    output.add_scaled(context, g, &bufs.center);

    for _ in 0..negatives {
        let n = table.sample(rng);
        if n == context {
            continue;
        }
        output.load_row(n, &mut bufs.other);
        let g = -sigmoid(dot(&bufs.center, &bufs.other)) * lr;
        for (acc, &u) in bufs.center_grad.iter_mut().zip(&bufs.other) {
            *acc += g * u;
        }
        output.add_scaled(n, g, &bufs.center);
    }

    input.add_scaled(center, 1.0, &bufs.center_grad);
}

/// Train skip-gram embeddings over the corpus. Returns the input vectors as
/// the embeddings used downstream; output vectors are kept on the returned
/// matrix for gradient inspection.
pub fn train_sgns(corpus: &Corpus, cfg: &TrainConfig) -> Result<EmbeddingMatrix, EmbeddingError> {
    cfg.validate()?;
    let vocab = Vocab::build(corpus, cfg.min_count)?;

    let docs: Vec<Vec<usize>> = corpus
        .documents
        .iter()
        .map(|d| {
            d.embedding_tokens()
                .filter_map(|t| vocab.index_of(&t))
                .collect::<Vec<usize>>()
        })
        .filter(|ids| ids.len() >= 2)
        .collect();
    if docs.is_empty() {
        return Err(EmbeddingError::CorpusTooSmall);
    }

    let dim = cfg.dim;
    let base_rng = Rng::new(cfg.seed);

    // Center vectors start small and uniform, output vectors at zero.
    let mut init_rng = base_rng.substream(0);
    let half = 0.5 / dim as f64;
    let init: Vec<f64> = (0..vocab.len() * dim)
        .map(|_| init_rng.uniform(-half, half))
        .collect();
    let input = SharedMatrix::from_values(init, dim);
    let output = SharedMatrix::zeros(vocab.len(), dim);

    let table = NegativeTable::new(&vocab);
    let keep: Vec<f64> = vocab
        .counts()
        .iter()
        .map(|&c| keep_probability(c, vocab.total_count(), cfg.subsample_threshold))
        .collect();

    let tokens_per_epoch: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let total_tokens = tokens_per_epoch * cfg.epochs as u64;
    let processed = AtomicU64::new(0);
    let workers = cfg.workers;

    for epoch in 0..cfg.epochs {
        std::thread::scope(|scope| {
            for worker in 0..workers {
                let mut rng = base_rng.substream(1 + (epoch * workers + worker) as u64);
                let input = &input;
                let output = &output;
                let table = &table;
                let keep = &keep;
                let docs = &docs;
                let processed = &processed;
                scope.spawn(move || {
                    let mut bufs = PairBuffers::new(dim);
                    let mut kept: Vec<usize> = Vec::new();
                    for (doc_idx, ids) in docs.iter().enumerate() {
                        if doc_idx % workers != worker {
                            continue;
                        }
                        let done = processed.fetch_add(ids.len() as u64, Ordering::Relaxed);
                        let mut lr = cfg.initial_learning_rate
                            * (1.0 - done as f64 / (total_tokens as f64 + 1.0));
                        let floor = cfg.initial_learning_rate * 1e-4;
                        if lr < floor {
                            lr = floor;
                        }

                        kept.clear();
                        for &id in ids {
                            if keep[id] >= 1.0 || rng.next_f64() < keep[id] {
                                kept.push(id);
                            }
                        }
                        if kept.len() < 2 {
                            continue;
                        }
                        for pos in 0..kept.len() {
                            let span = rng.range_inclusive(1, cfg.window);
                            let lo = pos.saturating_sub(span);
                            let hi = (pos + span).min(kept.len() - 1);
                            for ctx_pos in lo..=hi {
                                if ctx_pos == pos {
                                    continue;
                                }
                                train_pair(
                                    input,
                                    output,
                                    table,
                                    kept[pos],
                                    kept[ctx_pos],
                                    cfg.negatives,
                                    lr,
                                    &mut rng,
                                    &mut bufs,
                                );
                            }
                        }
                    }
                });
            }
        });
    }

    Ok(EmbeddingMatrix::from_parts(
        vocab,
        dim,
        input.into_values(),
        Some(output.into_values()),
    ))
}
