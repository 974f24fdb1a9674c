//! Second-order (p, q) random walks and walk scheduling.
//!
//! A walk of length `WL` traverses `WL` edges and therefore holds `WL + 1`
//! nodes. The first step is uniform over the start node's neighbours; every
//! later step from `v` (having arrived from `t`) picks `x ∈ adj(v)` with
//! weight `1/p` if `x == t`, `1` if `x` is adjacent to `t`, and `1/q`
//! otherwise.
//!
//! The number of walks started from each node is set by a [`WalkStrategy`]:
//! either a fixed count per node or a count proportional to the node degree.
//! Under the degree-proportional schedule every directed edge is the first
//! traversed edge of `walks_per_degree` walks in expectation.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sampling::{build_alias, sample_alias, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WalkStrategy {
    /// Same number of walks from every non-isolated node.
    Fixed { walks_per_node: usize },
    /// `walks_per_degree × k_i` walks from node `i`.
    DegreeBased { walks_per_degree: usize },
}

impl WalkStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WalkStrategy::Fixed { walks_per_node: 0 } => Err(Error::InvalidConfig(
                "walks per node must be at least 1".into(),
            )),
            WalkStrategy::DegreeBased {
                walks_per_degree: 0,
            } => Err(Error::InvalidConfig(
                "walks per degree must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Short name used in reports: `fixed` or `degree`.
    pub fn kind(&self) -> &'static str {
        match self {
            WalkStrategy::Fixed { .. } => "fixed",
            WalkStrategy::DegreeBased { .. } => "degree",
        }
    }

    /// Walks per node (fixed) or per unit of degree (degree-based).
    pub fn multiplier(&self) -> usize {
        match *self {
            WalkStrategy::Fixed { walks_per_node } => walks_per_node,
            WalkStrategy::DegreeBased { walks_per_degree } => walks_per_degree,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, WalkStrategy::Fixed { .. })
    }
}

impl fmt::Display for WalkStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.multiplier())
    }
}

impl FromStr for WalkStrategy {
    type Err = Error;

    /// Parses `fixed:20` or `degree:3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse strategy {s:?}"));
        let (kind, count) = s.trim().split_once(':').ok_or_else(bad)?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        let strategy = match kind.trim() {
            "fixed" => WalkStrategy::Fixed {
                walks_per_node: count,
            },
            "degree" => WalkStrategy::DegreeBased {
                walks_per_degree: count,
            },
            _ => return Err(bad()),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

/// Number of walks started from a node of degree `degree`.
pub fn walk_count(strategy: WalkStrategy, degree: usize) -> usize {
    match strategy {
        WalkStrategy::Fixed { walks_per_node } if degree > 0 => walks_per_node,
        WalkStrategy::Fixed { .. } => 0,
        WalkStrategy::DegreeBased { walks_per_degree } => walks_per_degree * degree,
    }
}

/// Total walks over the graph (TNW).
pub fn total_walk_count(strategy: WalkStrategy, graph: &Graph) -> usize {
    graph.degrees().map(|k| walk_count(strategy, k)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub strategy: WalkStrategy,
    /// Steps (edges) per walk.
    pub walk_length: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

impl WalkConfig {
    pub fn new(strategy: WalkStrategy, walk_length: usize) -> Self {
        WalkConfig {
            strategy,
            walk_length,
            p: 1.0,
            q: 1.0,
            seed: 0,
        }
    }

    pub fn with_pq(mut self, p: f64, q: f64) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        if self.walk_length == 0 {
            return Err(Error::InvalidConfig("walk length must be at least 1".into()));
        }
        check_pq(self.p, self.q)
    }
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidConfig(format!("p must be positive, got {p}")));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidConfig(format!("q must be positive, got {q}")));
    }
    Ok(())
}

/// How second-order steps are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerMode {
    /// Alias tables prebuilt for every directed edge. Memory is
    /// Σ over directed edges `(t, v)` of `k_v`.
    #[default]
    Precomputed,
    /// Uniform proposal with acceptance `α / max α`; no per-edge memory.
    Rejection,
}

/// Second-order transition samplers for one `(graph, p, q)`.
#[derive(Debug)]
pub struct TransitionModel<'g> {
    graph: &'g Graph,
    p: f64,
    q: f64,
    mode: SamplerMode,
    /// Start of the table for directed edge id `e` (see [`Graph::edge_offset`]).
    table_offsets: Vec<usize>,
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl<'g> TransitionModel<'g> {
    pub fn new(graph: &'g Graph, p: f64, q: f64) -> Result<Self> {
        Self::with_mode(graph, p, q, SamplerMode::Precomputed)
    }

    pub fn with_mode(graph: &'g Graph, p: f64, q: f64, mode: SamplerMode) -> Result<Self> {
        check_pq(p, q)?;
        let mut model = TransitionModel {
            graph,
            p,
            q,
            mode,
            table_offsets: Vec::new(),
            prob: Vec::new(),
            alias: Vec::new(),
        };
        if mode == SamplerMode::Precomputed {
            model.build_tables();
        }
        Ok(model)
    }

    fn build_tables(&mut self) {
        let g = self.graph;
        let mut offsets = Vec::with_capacity(g.degree_sum() + 1);
        offsets.push(0);
        for t in g.nodes() {
            for &v in g.neighbors(t) {
                offsets.push(offsets.last().unwrap() + g.degree(v));
            }
        }
        let total = *offsets.last().unwrap();
        let mut prob = vec![0.0; total];
        let mut alias = vec![0u32; total];
        let mut weights = Vec::new();
        let mut edge = 0;
        for t in g.nodes() {
            for &v in g.neighbors(t) {
                weights.clear();
                weights.extend(g.neighbors(v).iter().map(|&x| self.bias(t, x)));
                let range = offsets[edge]..offsets[edge + 1];
                build_alias(&weights, &mut prob[range.clone()], &mut alias[range]);
                edge += 1;
            }
        }
        self.table_offsets = offsets;
        self.prob = prob;
        self.alias = alias;
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    /// Unnormalised weight of stepping to `next` having arrived from `prev`.
    #[inline]
    fn bias(&self, prev: NodeId, next: NodeId) -> f64 {
        if next == prev {
            1.0 / self.p
        } else if self.graph.has_edge(prev, next) {
            1.0
        } else {
            1.0 / self.q
        }
    }

    fn directed_edge(&self, from: NodeId, to: NodeId) -> Option<usize> {
        let j = self.graph.neighbors(from).binary_search(&to).ok()?;
        Some(self.graph.edge_offset(from) + j)
    }

    /// Distribution over `neighbors(current)` that the sampler draws from
    /// after the step `prev -> current`. Decoded from the alias tables in
    /// precomputed mode.
    pub fn step_distribution(&self, prev: NodeId, current: NodeId) -> Option<Vec<f64>> {
        let edge = self.directed_edge(prev, current)?;
        match self.mode {
            SamplerMode::Precomputed => {
                let range = self.table_offsets[edge]..self.table_offsets[edge + 1];
                let prob = &self.prob[range.clone()];
                let alias = &self.alias[range];
                let n = prob.len() as f64;
                let mut out = vec![0.0; prob.len()];
                for (i, (&p, &a)) in prob.iter().zip(alias).enumerate() {
                    out[i] += p / n;
                    out[a as usize] += (1.0 - p) / n;
                }
                Some(out)
            }
            SamplerMode::Rejection => {
                let w: Vec<f64> = self
                    .graph
                    .neighbors(current)
                    .iter()
                    .map(|&x| self.bias(prev, x))
                    .collect();
                let total: f64 = w.iter().sum();
                Some(w.into_iter().map(|x| x / total).collect())
            }
        }
    }

    /// One second-order step after `prev -> current`; `None` if that is not
    /// an edge.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        prev: NodeId,
        current: NodeId,
        rng: &mut R,
    ) -> Option<NodeId> {
        let edge = self.directed_edge(prev, current)?;
        Some(self.second_order_step(edge, prev, current, rng).0)
    }

    /// Draws the next node after `prev -> current`, where `edge` is the id of
    /// that directed edge. Returns the next node and the id of `current -> next`.
    #[inline]
    fn second_order_step<R: Rng + ?Sized>(
        &self,
        edge: usize,
        prev: NodeId,
        current: NodeId,
        rng: &mut R,
    ) -> (NodeId, usize) {
        let adj = self.graph.neighbors(current);
        let k = match self.mode {
            SamplerMode::Precomputed => {
                let range = self.table_offsets[edge]..self.table_offsets[edge + 1];
                sample_alias(&self.prob[range.clone()], &self.alias[range], rng)
            }
            SamplerMode::Rejection => {
                let ceiling = (1.0 / self.p).max(1.0).max(1.0 / self.q);
                loop {
                    let k = rng.random_range(0..adj.len());
                    if rng.random::<f64>() * ceiling < self.bias(prev, adj[k]) {
                        break k;
                    }
                }
            }
        };
        (adj[k], self.graph.edge_offset(current) + k)
    }

    /// One walk of `walk_length` steps from `start`.
    pub fn generate_walk<R: Rng + ?Sized>(
        &self,
        start: NodeId,
        walk_length: usize,
        rng: &mut R,
    ) -> Result<Vec<NodeId>> {
        let g = self.graph;
        let degree = g.degree(start);
        if degree == 0 {
            return Err(Error::IsolatedStart(start));
        }
        let mut walk = Vec::with_capacity(walk_length + 1);
        walk.push(start);
        if walk_length == 0 {
            return Ok(walk);
        }
        let j = rng.random_range(0..degree);
        let mut prev = start;
        let mut current = g.neighbors(start)[j];
        let mut edge = g.edge_offset(start) + j;
        walk.push(current);
        for _ in 1..walk_length {
            if g.degree(current) == 0 {
                break;
            }
            let (next, next_edge) = self.second_order_step(edge, prev, current, rng);
            prev = current;
            current = next;
            edge = next_edge;
            walk.push(current);
        }
        Ok(walk)
    }
}

/// Stream id of repetition `rep` from `node`.
#[inline]
fn walk_stream(node: NodeId, rep: usize) -> u64 {
    debug_assert!(rep < (1 << 32));
    ((node.0 as u64) << 32) | rep as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    /// Walks grouped by start node in id order, repetitions in order.
    pub walks: Vec<Vec<NodeId>>,
    pub config: WalkConfig,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// Writes one walk per line as space-separated original tokens.
    pub fn write<W: Write>(&self, graph: &Graph, mut out: W) -> io::Result<()> {
        let mut line = String::new();
        for walk in &self.walks {
            line.clear();
            for (i, &v) in walk.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(graph.token(v));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Generates the full corpus on the current rayon pool.
pub fn generate_corpus(graph: &Graph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    generate_corpus_with(graph, cfg, SamplerMode::Precomputed, None)
}

/// Generates the corpus with an explicit sampler mode and worker count
/// (`None` uses the global rayon pool, `Some(1)` runs serially). The output is
/// identical for every worker count.
pub fn generate_corpus_with(
    graph: &Graph,
    cfg: &WalkConfig,
    mode: SamplerMode,
    workers: Option<usize>,
) -> Result<WalkCorpus> {
    cfg.validate()?;
    if graph.degree_sum() == 0 {
        return Err(Error::EmptyGraph);
    }
    let model = TransitionModel::with_mode(graph, cfg.p, cfg.q, mode)?;
    let walks_from = |v: NodeId| -> Vec<Vec<NodeId>> {
        (0..walk_count(cfg.strategy, graph.degree(v)))
            .map(|rep| {
                let mut rng = stream_rng(cfg.seed, walk_stream(v, rep));
                model
                    .generate_walk(v, cfg.walk_length, &mut rng)
                    .expect("scheduled nodes have degree >= 1")
            })
            .collect()
    };

    let per_node: Vec<Vec<Vec<NodeId>>> = match workers {
        Some(1) => graph.nodes().map(walks_from).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            pool.install(|| {
                (0..graph.num_nodes())
                    .into_par_iter()
                    .map(|i| walks_from(NodeId::from(i)))
                    .collect()
            })
        }
        None => (0..graph.num_nodes())
            .into_par_iter()
            .map(|i| walks_from(NodeId::from(i)))
            .collect(),
    };
    let walks: Vec<Vec<NodeId>> = per_node.into_iter().flatten().collect();
    debug_assert_eq!(walks.len(), total_walk_count(cfg.strategy, graph));
    Ok(WalkCorpus {
        walks,
        config: *cfg,
    })
}
