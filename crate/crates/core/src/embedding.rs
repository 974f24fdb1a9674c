//! Skip-gram with negative sampling over walk corpora.
//!
//! Each node has an input vector (the embedding) and a context vector. For a
//! `(center, context)` pair with negatives `n_1..n_K` the loss is
//!
//! ```text
//! L = -ln σ(u_ctx · v_c) - Σ_k ln σ(-u_{n_k} · v_c)
//! ```
//!
//! and one step moves every involved vector against its gradient. The default
//! trainer is single-threaded and bit-for-bit reproducible for a given seed.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampling::{stream_rng, AliasTable, StreamRng};
use crate::walk::WalkCorpus;

/// Exponent of the unigram distribution used for negatives.
pub const NEGATIVE_POWER: f64 = 0.75;

const SIGMOID_BINS: usize = 512;
const SIGMOID_LIMIT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmoidMode {
    #[default]
    Exact,
    /// 512-bin lookup over [-6, 6], saturating outside.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    /// Maximum context offset.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Learning rate reached at the end of the last epoch.
    pub lr_floor: f64,
    pub seed: u64,
    /// Draw the effective window uniformly from `1..=window` per center.
    pub shrink_window: bool,
    pub sigmoid: SigmoidMode,
    /// 1 = deterministic single-threaded training. More threads switch to
    /// lock-free shared updates whose result depends on scheduling.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            lr_floor: 0.0001,
            seed: 1,
            shrink_window: true,
            sigmoid: SigmoidMode::Exact,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if !(self.lr_floor > 0.0 && self.lr_floor <= self.learning_rate) {
            return bad("need 0 < lr_floor <= learning_rate");
        }
        Ok(())
    }
}

/// Token inventory with occurrence counts and the negative-sampling table.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    negatives: AliasTable,
}

impl Vocabulary {
    fn from_counts(tokens: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let weights: Vec<f64> = counts
            .iter()
            .map(|&c| (c as f64).powf(NEGATIVE_POWER))
            .collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            tokens,
            counts,
            index,
            negatives: AliasTable::new(&weights),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, token: &str) -> Option<u64> {
        self.index.get(token).map(|&i| self.counts[i as usize])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Normalised `count^0.75` distribution used to draw negatives.
    pub fn negative_probabilities(&self) -> &[f64] {
        self.negatives.probabilities()
    }

    #[inline]
    pub fn sample_negative<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.negatives.sample(rng) as u32
    }
}

/// Sentences over vocabulary ids, ready for training. Ids follow the first
/// appearance of each token, so an in-memory corpus and the same corpus read
/// back from disk produce the same vocabulary.
#[derive(Debug, Clone)]
pub struct TokenCorpus {
    pub vocab: Vocabulary,
    pub sentences: Vec<Vec<u32>>,
}

impl TokenCorpus {
    pub fn from_sentences<I, S, T>(sentences: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut out = Vec::new();
        for sentence in sentences {
            let ids: Vec<u32> = sentence
                .into_iter()
                .map(|t| {
                    let t = t.as_ref();
                    let id = match index.get(t) {
                        Some(&id) => id,
                        None => {
                            let id = tokens.len() as u32;
                            tokens.push(t.to_owned());
                            counts.push(0);
                            index.insert(t.to_owned(), id);
                            id
                        }
                    };
                    counts[id as usize] += 1;
                    id
                })
                .collect();
            if !ids.is_empty() {
                out.push(ids);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(TokenCorpus {
            vocab: Vocabulary::from_counts(tokens, counts)?,
            sentences: out,
        })
    }

    /// Corpus over the original node tokens of `graph`.
    pub fn from_walks(walks: &WalkCorpus, graph: &Graph) -> Result<Self> {
        Self::from_sentences(
            walks
                .walks
                .iter()
                .map(|w| w.iter().map(|&v| graph.token(v))),
        )
    }

    /// Reads a corpus file: one sentence per line, whitespace-separated tokens.
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = Vec::new();
        for line in BufReader::new(file).lines() {
            lines.push(line.map_err(|e| Error::io(path, e))?);
        }
        Self::from_sentences(lines.iter().map(|l| l.split_whitespace()))
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Vocabulary of a walk corpus (exact counts, unigram^0.75 negatives).
pub fn build_vocab(walks: &WalkCorpus, graph: &Graph) -> Result<Vocabulary> {
    Ok(TokenCorpus::from_walks(walks, graph)?.vocab)
}

/// Skip-gram `(center, context)` pairs of one sentence. With `shrink` the
/// effective window of every center is drawn uniformly from `1..=window`.
pub fn generate_pairs<R: Rng + ?Sized>(
    sentence: &[u32],
    window: usize,
    shrink: bool,
    rng: &mut R,
    out: &mut Vec<(u32, u32)>,
) {
    out.clear();
    let n = sentence.len();
    for i in 0..n {
        let w = if shrink {
            rng.random_range(1..=window)
        } else {
            window
        };
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(n - 1);
        for j in lo..=hi {
            if j != i {
                out.push((sentence[i], sentence[j]));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    input: Vec<f64>,
    context: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Matrix with the given input rows (row-major) and zero context vectors.
    pub fn from_rows(tokens: Vec<String>, dim: usize, input: Vec<f64>) -> Result<Self> {
        if dim == 0 || input.len() != tokens.len() * dim {
            return Err(Error::DimensionMismatch {
                left: input.len(),
                right: tokens.len() * dim,
            });
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let context = vec![0.0; input.len()];
        Ok(EmbeddingMatrix {
            tokens,
            index,
            dim,
            input,
            context,
        })
    }

    pub fn zeros(tokens: Vec<String>, dim: usize) -> Self {
        let n = tokens.len();
        Self::from_rows(tokens, dim, vec![0.0; n * dim]).expect("consistent shape")
    }

    pub fn num_rows(&self) -> usize {
        self.tokens.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn row_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_row(&self, i: usize) -> &[f64] {
        &self.context[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.context[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.row_of(token).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.input.chunks_exact(self.dim)
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.context).all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.input
            .iter()
            .chain(&self.context)
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// word2vec text format: `N d` header then `<token> <d values>` per row,
    /// values with 6 significant digits.
    pub fn write_word2vec<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.num_rows(), self.dim)?;
        let mut line = String::new();
        for (token, row) in self.tokens.iter().zip(self.rows()) {
            line.clear();
            line.push_str(token);
            for &x in row {
                line.push(' ');
                line.push_str(&format_sig6(x));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_word2vec(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?
            .map_err(|e| Error::io(path, e))?;
        let mut fields = header.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(n)), Some(Ok(dim)), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(parse_err(1, format!("bad header {header:?}")));
        };
        let mut tokens = Vec::with_capacity(n);
        let mut input = Vec::with_capacity(n * dim);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap_or_default();
            let before = input.len();
            for f in fields {
                let x: f64 = f
                    .parse()
                    .map_err(|_| parse_err(i + 2, format!("bad value {f:?}")))?;
                input.push(x);
            }
            if input.len() - before != dim {
                return Err(parse_err(
                    i + 2,
                    format!("expected {dim} values, got {}", input.len() - before),
                ));
            }
            tokens.push(token.to_owned());
        }
        if tokens.len() != n {
            return Err(parse_err(1, format!("header says {n} rows, found {}", tokens.len())));
        }
        Self::from_rows(tokens, dim, input)
    }
}

/// `%g`-style formatting with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (5 - exp) as usize, x)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct Sigmoid {
    mode: SigmoidMode,
}

static SIGMOID_TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();

impl Sigmoid {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self.mode {
            SigmoidMode::Exact => sigmoid(x),
            SigmoidMode::Table => {
                if x >= SIGMOID_LIMIT {
                    1.0
                } else if x <= -SIGMOID_LIMIT {
                    0.0
                } else {
                    let table = SIGMOID_TABLE.get_or_init(|| {
                        (0..SIGMOID_BINS)
                            .map(|i| {
                                let x = (i as f64 + 0.5) / SIGMOID_BINS as f64
                                    * (2.0 * SIGMOID_LIMIT)
                                    - SIGMOID_LIMIT;
                                sigmoid(x)
                            })
                            .collect()
                    });
                    let bin = ((x + SIGMOID_LIMIT) / (2.0 * SIGMOID_LIMIT) * SIGMOID_BINS as f64)
                        as usize;
                    table[bin.min(SIGMOID_BINS - 1)]
                }
            }
        }
    }

    /// `-ln σ(x)` given `σ(x)` from [`Sigmoid::eval`].
    #[inline]
    fn neg_log(self, x: f64, s: f64) -> f64 {
        match self.mode {
            SigmoidMode::Exact => softplus(-x),
            SigmoidMode::Table => -(s.max(1e-12)).ln(),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss of one pair and its gradient with respect to every vector involved.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Exact loss and gradients for center vector `v`, context vector `u_ctx`
/// and negative context vectors.
pub fn sgns_loss_and_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let d = center.len();
    let mut grad_center = vec![0.0; d];
    let s = dot(center, context);
    let mut loss = softplus(-s);
    // d/ds [-ln σ(s)] = σ(s) - 1
    let g = sigmoid(s) - 1.0;
    for k in 0..d {
        grad_center[k] += g * context[k];
    }
    let grad_context = center.iter().map(|x| g * x).collect();
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for u in negatives {
        let s = dot(center, u);
        loss += softplus(s);
        // d/ds [-ln σ(-s)] = σ(s)
        let g = sigmoid(s);
        for k in 0..d {
            grad_center[k] += g * u[k];
        }
        grad_negatives.push(center.iter().map(|x| g * x).collect());
    }
    SgnsGradient {
        loss,
        center: grad_center,
        context: grad_context,
        negatives: grad_negatives,
    }
}

/// Reusable buffers for [`sgns_step`].
#[derive(Debug, Default)]
pub struct StepScratch {
    neu1e: Vec<f64>,
    coef: Vec<f64>,
}

/// One gradient-descent step on the pair `(center, context)` with the given
/// negative rows. All gradients are taken at the pre-step values, so repeated
/// negatives accumulate. Returns the pair's loss before the step.
pub fn sgns_step(
    m: &mut EmbeddingMatrix,
    center: usize,
    context: usize,
    negatives: &[u32],
    lr: f64,
    scratch: &mut StepScratch,
) -> f64 {
    step_with(m, center, context, negatives, lr, Sigmoid { mode: SigmoidMode::Exact }, scratch)
}

fn step_with(
    m: &mut EmbeddingMatrix,
    center: usize,
    context: usize,
    negatives: &[u32],
    lr: f64,
    sig: Sigmoid,
    scratch: &mut StepScratch,
) -> f64 {
    let d = m.dim;
    let v = &m.input[center * d..(center + 1) * d];
    scratch.neu1e.clear();
    scratch.neu1e.resize(d, 0.0);
    scratch.coef.clear();
    let mut loss = 0.0;
    let targets = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n as usize, 0.0)));
    for (t, label) in targets.clone() {
        let u = &m.context[t * d..(t + 1) * d];
        let s = dot(v, u);
        let f = sig.eval(s);
        loss += if label > 0.0 {
            sig.neg_log(s, f)
        } else {
            sig.neg_log(-s, 1.0 - f)
        };
        let g = label - f;
        for (e, x) in scratch.neu1e.iter_mut().zip(u) {
            *e += g * x;
        }
        scratch.coef.push(g);
    }
    for ((t, _), &g) in targets.zip(&scratch.coef) {
        let step = lr * g;
        let (v, u) = (&m.input[center * d..(center + 1) * d], &mut m.context[t * d..(t + 1) * d]);
        for (x, y) in u.iter_mut().zip(v) {
            *x += step * y;
        }
    }
    for (x, e) in m.input[center * d..(center + 1) * d].iter_mut().zip(&scratch.neu1e) {
        *x += lr * e;
    }
    loss
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub embedding: EmbeddingMatrix,
    /// Mean pair loss of every epoch.
    pub epoch_loss: Vec<f64>,
}

fn learning_rate(cfg: &TrainConfig, processed: usize, total: usize) -> f64 {
    let progress = processed as f64 / total.max(1) as f64;
    (cfg.learning_rate - (cfg.learning_rate - cfg.lr_floor) * progress).max(cfg.lr_floor)
}

fn initial_matrix(vocab: &Vocabulary, cfg: &TrainConfig, rng: &mut StreamRng) -> EmbeddingMatrix {
    let d = cfg.dim;
    let bound = 0.5 / d as f64;
    let input: Vec<f64> = (0..vocab.len() * d)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    EmbeddingMatrix::from_rows(vocab.tokens.clone(), d, input).expect("consistent shape")
}

/// Trains embeddings for every token of `corpus`.
pub fn train(corpus: &TokenCorpus, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    if corpus.sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if cfg.threads > 1 {
        return train_hogwild(corpus, cfg);
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let mut m = initial_matrix(&corpus.vocab, cfg, &mut rng);
    let sig = Sigmoid { mode: cfg.sigmoid };
    let total = corpus.num_tokens() * cfg.epochs;
    let mut processed = 0;
    let mut order: Vec<usize> = (0..corpus.sentences.len()).collect();
    let mut pairs = Vec::new();
    let mut negatives = Vec::with_capacity(cfg.negatives);
    let mut scratch = StepScratch::default();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss, mut count) = (0.0, 0usize);
        for &s in &order {
            let sentence = &corpus.sentences[s];
            let lr = learning_rate(cfg, processed, total);
            generate_pairs(sentence, cfg.window, cfg.shrink_window, &mut rng, &mut pairs);
            for &(c, ctx) in &pairs {
                negatives.clear();
                for _ in 0..cfg.negatives {
                    let n = corpus.vocab.sample_negative(&mut rng);
                    if n != ctx {
                        negatives.push(n);
                    }
                }
                loss += step_with(&mut m, c as usize, ctx as usize, &negatives, lr, sig, &mut scratch);
                count += 1;
            }
            processed += sentence.len();
        }
        let mean = if count == 0 { 0.0 } else { loss / count as f64 };
        log::debug!("epoch {}: mean loss {mean:.5}", epoch + 1);
        epoch_loss.push(mean);
    }
    Ok(TrainOutput {
        embedding: m,
        epoch_loss,
    })
}

struct SharedRows(Vec<AtomicU64>);

impl SharedRows {
    fn new(values: &[f64]) -> Self {
        SharedRows(values.iter().map(|x| AtomicU64::new(x.to_bits())).collect())
    }

    fn read(&self, row: usize, out: &mut [f64]) {
        let d = out.len();
        for (k, x) in out.iter_mut().enumerate() {
            *x = f64::from_bits(self.0[row * d + k].load(Ordering::Relaxed));
        }
    }

    fn add(&self, row: usize, scale: f64, delta: &[f64]) {
        let d = delta.len();
        for (k, x) in delta.iter().enumerate() {
            let cell = &self.0[row * d + k];
            let old = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((old + scale * x).to_bits(), Ordering::Relaxed);
        }
    }

    fn into_vec(self) -> Vec<f64> {
        self.0
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}

/// Shared-memory parallel training: sentences are sharded across threads and
/// every thread updates the matrices without locks. Concurrent updates of the
/// same row may overwrite each other, so results vary between runs.
fn train_hogwild(corpus: &TokenCorpus, cfg: &TrainConfig) -> Result<TrainOutput> {
    let d = cfg.dim;
    let mut rng = stream_rng(cfg.seed, 0);
    let init = initial_matrix(&corpus.vocab, cfg, &mut rng);
    let input = SharedRows::new(&init.input);
    let context = SharedRows::new(&init.context);
    let total = corpus.num_tokens() * cfg.epochs;
    let processed = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut order: Vec<usize> = (0..corpus.sentences.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let shard = order.len().div_ceil(cfg.threads);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (loss, count) = pool.install(|| {
            order
                .par_chunks(shard)
                .enumerate()
                .map(|(t, chunk)| {
                    let mut rng = stream_rng(cfg.seed, 1 + (epoch * cfg.threads + t) as u64);
                    let sig = Sigmoid { mode: cfg.sigmoid };
                    let mut v = vec![0.0; d];
                    let mut u = vec![0.0; d];
                    let mut neu1e = vec![0.0; d];
                    let mut pairs = Vec::new();
                    let (mut loss, mut count) = (0.0, 0usize);
                    for &s in chunk {
                        let sentence = &corpus.sentences[s];
                        let lr = learning_rate(cfg, processed.load(Ordering::Relaxed), total);
                        generate_pairs(sentence, cfg.window, cfg.shrink_window, &mut rng, &mut pairs);
                        for &(c, ctx) in &pairs {
                            input.read(c as usize, &mut v);
                            neu1e.fill(0.0);
                            let mut targets = vec![(ctx, 1.0)];
                            for _ in 0..cfg.negatives {
                                let n = corpus.vocab.sample_negative(&mut rng);
                                if n != ctx {
                                    targets.push((n, 0.0));
                                }
                            }
                            for (t, label) in targets {
                                context.read(t as usize, &mut u);
                                let s = dot(&v, &u);
                                let f = sig.eval(s);
                                loss += if label > 0.0 {
                                    sig.neg_log(s, f)
                                } else {
                                    sig.neg_log(-s, 1.0 - f)
                                };
                                let g = label - f;
                                for (e, x) in neu1e.iter_mut().zip(&u) {
                                    *e += g * x;
                                }
                                context.add(t as usize, lr * g, &v);
                            }
                            input.add(c as usize, lr, &neu1e);
                            count += 1;
                        }
                        processed.fetch_add(sentence.len(), Ordering::Relaxed);
                    }
                    (loss, count)
                })
                .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
        });
        epoch_loss.push(if count == 0 { 0.0 } else { loss / count as f64 });
    }
    let mut embedding = init;
    embedding.input = input.into_vec();
    embedding.context = context.into_vec();
    Ok(TrainOutput {
        embedding,
        epoch_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::karate_club;
    use crate::walk::{generate_corpus, WalkConfig, WalkStrategy};

    fn corpus(sentences: &[&[&str]]) -> TokenCorpus {
        TokenCorpus::from_sentences(sentences.iter().map(|s| s.iter())).unwrap()
    }

    #[test]
    fn vocab_counts() {
        let c = corpus(&[&["a", "b"], &["a", "b"]]);
        assert_eq!(c.vocab.count("a"), Some(2));
        assert_eq!(c.vocab.count("b"), Some(2));
        let c = corpus(&[&["a", "a", "a"]]);
        assert_eq!(c.vocab.count("a"), Some(3));
        assert_eq!(c.vocab.negative_probabilities(), [1.0]);
    }

    #[test]
    fn negative_table_follows_power() {
        let c = corpus(&[&["a", "b", "b", "b", "b", "b", "b", "b", "b"]]);
        let p = c.vocab.negative_probabilities();
        let (wa, wb) = (1.0f64, 8.0f64.powf(0.75));
        assert!((p[0] - wa / (wa + wb)).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus() {
        let empty: Vec<Vec<&str>> = vec![vec![], vec![]];
        assert!(matches!(
            TokenCorpus::from_sentences(empty),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn karate_vocab_totals() {
        let g = karate_club();
        let cfg = WalkConfig::new(WalkStrategy::DegreeBased { walks_per_degree: 5 }, 10).with_seed(7);
        let walks = generate_corpus(&g, &cfg).unwrap();
        let vocab = build_vocab(&walks, &g).unwrap();
        assert_eq!(vocab.counts().iter().sum::<u64>(), 780 * 11);
        assert_eq!(vocab.len(), 34);
    }

    #[test]
    fn pair_counts_without_shrink() {
        let mut rng = stream_rng(0, 0);
        let mut out = Vec::new();
        generate_pairs(&[0, 1], 1, false, &mut rng, &mut out);
        assert_eq!(out, vec![(0, 1), (1, 0)]);
        generate_pairs(&[0, 1, 2, 3, 4], 2, false, &mut rng, &mut out);
        assert_eq!(out.len(), 14);
        generate_pairs(&[0, 1, 2], 5, false, &mut rng, &mut out);
        let mut sorted = out.clone();
        sorted.sort();
        assert_eq!(sorted, vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
    }

    #[test]
    fn shrunk_windows_stay_within_bounds() {
        let mut rng = stream_rng(4, 0);
        let mut out = Vec::new();
        let sentence: Vec<u32> = (0..20).collect();
        for _ in 0..50 {
            generate_pairs(&sentence, 3, true, &mut rng, &mut out);
            assert!(out.iter().all(|&(c, x)| c != x && c.abs_diff(x) <= 3));
            assert!(out.len() >= 2 * 19);
            assert!(out.len() <= 2 * (3 * 20 - 6));
        }
    }

    #[test]
    fn zero_state_loss_is_ln2_per_target() {
        let mut m = EmbeddingMatrix::zeros(vec!["a".into(), "b".into(), "c".into()], 4);
        let mut scratch = StepScratch::default();
        let loss = sgns_step(&mut m, 0, 1, &[2, 2, 1], 0.1, &mut scratch);
        assert!((loss - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn tiny_learning_rate_leaves_matrices() {
        let tokens: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let input: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut m = EmbeddingMatrix::from_rows(tokens, 4, input).unwrap();
        for i in 0..4 {
            for (k, x) in m.context_row_mut(i).iter_mut().enumerate() {
                *x = ((i * 4 + k) as f64 * 0.11).cos();
            }
        }
        let before = m.clone();
        let mut scratch = StepScratch::default();
        for _ in 0..10 {
            sgns_step(&mut m, 1, 2, &[3, 0], 1e-15, &mut scratch);
        }
        for (a, b) in m.input.iter().zip(&before.input) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in m.context.iter().zip(&before.context) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn step_moves_against_gradient() {
        let tokens: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        let input: Vec<f64> = (0..15).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut m = EmbeddingMatrix::from_rows(tokens, 3, input).unwrap();
        for i in 0..5 {
            for (k, x) in m.context_row_mut(i).iter_mut().enumerate() {
                *x = ((i * 3 + k) as f64 * 0.3).cos();
            }
        }
        let grad = sgns_loss_and_grad(m.row(0), m.context_row(1), &[m.context_row(3), m.context_row(4)]);
        let before = m.clone();
        let lr = 0.05;
        let loss = sgns_step(&mut m, 0, 1, &[3, 4], lr, &mut StepScratch::default());
        assert!((loss - grad.loss).abs() < 1e-12);
        let check = |after: &[f64], before: &[f64], g: &[f64]| {
            for ((a, b), g) in after.iter().zip(before).zip(g) {
                assert!((a - (b - lr * g)).abs() < 1e-12);
            }
        };
        check(m.row(0), before.row(0), &grad.center);
        check(m.context_row(1), before.context_row(1), &grad.context);
        check(m.context_row(3), before.context_row(3), &grad.negatives[0]);
        check(m.context_row(4), before.context_row(4), &grad.negatives[1]);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(-0.5), "-0.5");
        assert_eq!(format_sig6(0.0123456789), "0.0123457");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(-0.0000123456), "-1.23456e-05");
        assert_eq!(format_sig6(9.9999996), "10");
        assert_eq!(format_sig6(0.0001), "0.0001");
    }

    #[test]
    fn word2vec_round_trip() {
        let tokens = vec!["x".to_string(), "y".to_string()];
        let m = EmbeddingMatrix::from_rows(tokens, 3, vec![0.5, -1.25, 3e-7, 1.0, 2.0, 1234567.0]).unwrap();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        m.write_word2vec(&mut file).unwrap();
        let text = std::fs::read_to_string(file.path()).unwrap();
        assert_eq!(text, "2 3\nx 0.5 -1.25 3e-07\ny 1 2 1.23457e+06\n");
        let back = EmbeddingMatrix::read_word2vec(file.path()).unwrap();
        assert_eq!(back.tokens(), m.tokens());
        assert_eq!(back.row(0), m.row(0));
        assert_eq!(back.row(1)[2], 1234570.0);
    }

    #[test]
    fn word2vec_rejects_bad_rows() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(b"2 2\na 1 2\nb 1\n").unwrap();
        assert!(matches!(
            EmbeddingMatrix::read_word2vec(file.path()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { dim: 0, ..ok },
            TrainConfig { window: 0, ..ok },
            TrainConfig { negatives: 0, ..ok },
            TrainConfig { epochs: 0, ..ok },
            TrainConfig { lr_floor: 0.0, ..ok },
            TrainConfig { lr_floor: 0.1, ..ok },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn one_epoch_on_tiny_corpus() {
        let c = corpus(&[&["a", "b", "c"], &["c", "b"]]);
        let cfg = TrainConfig { dim: 4, epochs: 1, ..TrainConfig::default() };
        let out = train(&c, &cfg).unwrap();
        assert!(out.embedding.is_finite());
        assert_eq!(out.embedding.num_rows(), 3);
        assert_eq!(out.epoch_loss.len(), 1);
        assert!(out.epoch_loss[0].is_finite());
    }

    #[test]
    fn initial_rows_within_bounds() {
        let c = corpus(&[&["a", "b", "c", "d"]]);
        let cfg = TrainConfig { dim: 8, ..TrainConfig::default() };
        let m = initial_matrix(&c.vocab, &cfg, &mut stream_rng(1, 0));
        assert!(m.input.iter().all(|x| x.abs() <= 0.5 / 8.0));
        assert!(m.context.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn table_sigmoid_close_to_exact() {
        let table = Sigmoid { mode: SigmoidMode::Table };
        for i in -100..=100 {
            let x = i as f64 * 0.07;
            assert!((table.eval(x) - sigmoid(x)).abs() < 0.01);
        }
        assert_eq!(table.eval(7.0), 1.0);
        assert_eq!(table.eval(-6.0), 0.0);
    }

    #[test]
    fn hogwild_trains_finite_vectors() {
        let g = karate_club();
        let walks = generate_corpus(
            &g,
            &WalkConfig::new(WalkStrategy::DegreeBased { walks_per_degree: 2 }, 10),
        )
        .unwrap();
        let c = TokenCorpus::from_walks(&walks, &g).unwrap();
        let cfg = TrainConfig { dim: 16, threads: 4, ..TrainConfig::default() };
        let out = train(&c, &cfg).unwrap();
        assert!(out.embedding.is_finite());
        assert!(out.epoch_loss.last().unwrap() < &out.epoch_loss[0]);
    }
}
