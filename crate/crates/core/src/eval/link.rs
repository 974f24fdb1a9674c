use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logistic::{fit_cv, FitOptions};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sampling::{stream_rng, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeOperator {
    #[default]
    Hadamard,
    Average,
    L1,
    L2,
}

impl EdgeOperator {
    pub const ALL: [EdgeOperator; 4] = [
        EdgeOperator::Hadamard,
        EdgeOperator::Average,
        EdgeOperator::L1,
        EdgeOperator::L2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EdgeOperator::Hadamard => "hadamard",
            EdgeOperator::Average => "average",
            EdgeOperator::L1 => "l1",
            EdgeOperator::L2 => "l2",
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            EdgeOperator::Hadamard => a * b,
            EdgeOperator::Average => 0.5 * (a + b),
            EdgeOperator::L1 => (a - b).abs(),
            EdgeOperator::L2 => (a - b) * (a - b),
        }
    }
}

impl fmt::Display for EdgeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeOperator::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown edge operator {s:?} (expected hadamard, average, l1 or l2)"
                ))
            })
    }
}

/// Elementwise combination of two node vectors; symmetric in `u` and `v`.
pub fn edge_features(op: EdgeOperator, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(&a, &b)| op.apply(a, b)).collect())
}

#[derive(Debug, Clone)]
pub struct LinkSplit {
    /// Original graph minus `test_pos`; node ids are unchanged.
    pub train_graph: Graph,
    pub test_pos: Vec<(NodeId, NodeId)>,
    pub test_neg: Vec<(NodeId, NodeId)>,
    pub seed: u64,
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Uniform node pair, `a < b`, that passes `accept` and is not yet in `seen`.
fn sample_pairs<F>(
    n: usize,
    count: usize,
    rng: &mut StreamRng,
    seen: &mut HashSet<(NodeId, NodeId)>,
    accept: F,
    what: &str,
) -> Result<Vec<(NodeId, NodeId)>>
where
    F: Fn(NodeId, NodeId) -> bool,
{
    let mut out = Vec::with_capacity(count);
    let total_pairs = n * n.saturating_sub(1) / 2;
    let mut attempts = 0usize;
    let budget = 200 * count + 10_000;
    while out.len() < count && attempts < budget {
        attempts += 1;
        let a = NodeId::from(rng.random_range(0..n));
        let b = NodeId::from(rng.random_range(0..n));
        if a == b {
            continue;
        }
        let pair = ordered(a, b);
        if accept(pair.0, pair.1) && seen.insert(pair) {
            out.push(pair);
        }
    }
    if out.len() < count {
        // dense graph: enumerate what is left and shuffle
        let mut rest: Vec<(NodeId, NodeId)> = Vec::new();
        if total_pairs <= 50_000_000 {
            for i in 0..n {
                for j in i + 1..n {
                    let pair = (NodeId::from(i), NodeId::from(j));
                    if accept(pair.0, pair.1) && !seen.contains(&pair) {
                        rest.push(pair);
                    }
                }
            }
        }
        let missing = count - out.len();
        if rest.len() < missing {
            return Err(Error::TooSparse(format!(
                "only {} {what} available, {count} required",
                out.len() + rest.len()
            )));
        }
        rest.shuffle(rng);
        for pair in rest.into_iter().take(missing) {
            seen.insert(pair);
            out.push(pair);
        }
    }
    Ok(out)
}

/// Removes `round(test_fraction × |E|)` uniformly chosen edges, skipping any
/// removal that would leave an endpoint without neighbours, and pairs them
/// with as many uniformly drawn non-edges.
pub fn make_link_split(graph: &Graph, test_fraction: f64, seed: u64) -> Result<LinkSplit> {
    if !(test_fraction > 0.0 && test_fraction < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 0.5), got {test_fraction}"
        )));
    }
    let target = (test_fraction * graph.num_edges() as f64).round() as usize;
    if target == 0 {
        return Err(Error::TooSparse(format!(
            "{} edges give no test edge at fraction {test_fraction}",
            graph.num_edges()
        )));
    }
    let mut rng = stream_rng(seed, 0x4c49_4e4b);
    let mut edges: Vec<(NodeId, NodeId)> = graph.edges().collect();
    edges.shuffle(&mut rng);
    let mut degree: Vec<usize> = graph.degrees().collect();
    let mut test_pos = Vec::with_capacity(target);
    for &(a, b) in &edges {
        if test_pos.len() == target {
            break;
        }
        if degree[a.index()] > 1 && degree[b.index()] > 1 {
            degree[a.index()] -= 1;
            degree[b.index()] -= 1;
            test_pos.push((a, b));
        }
    }
    if test_pos.len() < target {
        return Err(Error::TooSparse(format!(
            "could remove only {} of {target} edges without isolating a node",
            test_pos.len()
        )));
    }
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let test_neg = sample_pairs(
        graph.num_nodes(),
        target,
        &mut rng,
        &mut seen,
        |a, b| !graph.has_edge(a, b),
        "non-edges",
    )?;
    Ok(LinkSplit {
        train_graph: graph.without_edges(&test_pos),
        test_pos,
        test_neg,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkOutcome {
    /// Test accuracy in percent at probability threshold 0.5.
    pub accuracy: f64,
    pub auc: f64,
    pub best_c: f64,
    pub train_size: usize,
    pub test_size: usize,
}

/// Area under the ROC curve via the Mann-Whitney statistic; ties count half.
pub fn auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::Evaluation("AUC needs both positive and negative scores".into()));
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // sum of midranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j + 1) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let np = positive.len() as f64;
    let nn = negative.len() as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

fn pair_features(
    emb: &EmbeddingMatrix,
    graph: &Graph,
    pairs: &[(NodeId, NodeId)],
    op: EdgeOperator,
    out: &mut Vec<f64>,
) -> Result<()> {
    let lookup = |n: NodeId| {
        let token = graph.token(n);
        emb.vector(token)
            .ok_or_else(|| Error::MissingEmbedding(token.to_string()))
    };
    for &(a, b) in pairs {
        out.extend(edge_features(op, lookup(a)?, lookup(b)?)?);
    }
    Ok(())
}

/// Binary logistic regression on operator features: train edges against an
/// equal number of node pairs that are neither train edges nor test pairs,
/// evaluated on the held-out positives and negatives.
pub fn predict_links(
    emb: &EmbeddingMatrix,
    split: &LinkSplit,
    op: EdgeOperator,
    seed: u64,
) -> Result<LinkOutcome> {
    let g = &split.train_graph;
    let train_pos: Vec<(NodeId, NodeId)> = g.edges().collect();
    if train_pos.is_empty() {
        return Err(Error::Evaluation("training graph has no edges".into()));
    }
    let mut seen: HashSet<(NodeId, NodeId)> = split
        .test_pos
        .iter()
        .chain(&split.test_neg)
        .map(|&(a, b)| ordered(a, b))
        .collect();
    let mut rng = stream_rng(seed, 0x4e45_4753);
    let train_neg = sample_pairs(
        g.num_nodes(),
        train_pos.len(),
        &mut rng,
        &mut seen,
        |a, b| !g.has_edge(a, b),
        "training non-edges",
    )?;

    let mut xt = Vec::new();
    pair_features(emb, g, &train_pos, op, &mut xt)?;
    pair_features(emb, g, &train_neg, op, &mut xt)?;
    let mut yt = vec![1usize; train_pos.len()];
    yt.resize(train_pos.len() + train_neg.len(), 0);

    let mut xv = Vec::new();
    pair_features(emb, g, &split.test_pos, op, &mut xv)?;
    pair_features(emb, g, &split.test_neg, op, &mut xv)?;
    let n_pos = split.test_pos.len();
    let test_size = n_pos + split.test_neg.len();

    let dim = emb.dim();
    let (model, _) = fit_cv(&xt, dim, &yt, 2, &FitOptions::default(), seed)?;
    let scores: Vec<f64> = xv
        .chunks_exact(dim)
        .map(|row| model.predict_proba(row)[1])
        .collect();
    let correct = scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| (s >= 0.5) == (i < n_pos))
        .count();
    Ok(LinkOutcome {
        accuracy: 100.0 * correct as f64 / test_size as f64,
        auc: auc(&scores[..n_pos], &scores[n_pos..])?,
        best_c: model.c,
        train_size: yt.len(),
        test_size,
    })
}
