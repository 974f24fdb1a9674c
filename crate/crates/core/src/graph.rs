//! Undirected, unweighted graphs in compressed sparse row form.
//!
//! Every [`Graph`] is normalised: adjacency is symmetric, sorted, free of
//! self-loops and of duplicate edges. Node tokens from input files are mapped
//! to dense [`NodeId`]s in first-appearance order and the mapping is kept so
//! corpora and embeddings can be written back with the original tokens.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index in `[0, N)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Collapse repeated edges (including `a b` followed by `b a`). When false
    /// a repeated edge is reported as a parse error.
    pub deduplicate: bool,
    /// Drop `a a` lines. When false a self-loop is reported as a parse error.
    pub drop_self_loops: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            deduplicate: true,
            drop_self_loops: true,
        }
    }
}

/// What normalisation did to the raw input.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub lines: usize,
    pub nodes: usize,
    pub edges: usize,
    pub duplicates_removed: usize,
    pub self_loops_removed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelReport {
    pub matched: usize,
    /// Lines whose node token is not in the graph (or repeats an earlier line).
    pub skipped: usize,
    pub classes: usize,
}

/// Single-object JSON summary of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
}

#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    tokens: Vec<String>,
    index: HashMap<String, NodeId>,
    labels: Vec<Option<u32>>,
    label_names: Vec<String>,
}

/// Interns node tokens and collects raw edges before normalisation.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    tokens: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub duplicates_removed: usize,
    pub self_loops_removed: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `token`, assigning the next dense id on first sight.
    pub fn node(&mut self, token: &str) -> NodeId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = NodeId::from(self.tokens.len());
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn edge(&mut self, a: &str, b: &str) -> (NodeId, NodeId) {
        let a = self.node(a);
        let b = self.node(b);
        self.edges.push((a, b));
        (a, b)
    }

    pub fn num_nodes(&self) -> usize {
        self.tokens.len()
    }

    pub fn build(self) -> (Graph, BuildStats) {
        let mut stats = BuildStats::default();
        let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(self.edges.len());
        for (a, b) in self.edges {
            if a == b {
                stats.self_loops_removed += 1;
                continue;
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        stats.duplicates_removed = before - edges.len();
        let n = self.tokens.len();
        let graph = Graph::assemble(self.tokens, self.index, &edges, vec![None; n], Vec::new());
        (graph, stats)
    }
}

impl Graph {
    /// Builds a graph over `tokens` from canonical, unique `(a, b)` pairs with
    /// `a < b`.
    fn assemble(
        tokens: Vec<String>,
        index: HashMap<String, NodeId>,
        edges: &[(NodeId, NodeId)],
        labels: Vec<Option<u32>>,
        label_names: Vec<String>,
    ) -> Graph {
        let n = tokens.len();
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            degree[a.index()] += 1;
            degree[b.index()] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![NodeId(0); offsets[n]];
        for &(a, b) in edges {
            neighbors[cursor[a.index()]] = b;
            cursor[a.index()] += 1;
            neighbors[cursor[b.index()]] = a;
            cursor[b.index()] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Graph {
            offsets,
            neighbors,
            tokens,
            index,
            labels,
            label_names,
        }
    }

    /// Convenience constructor from token pairs; duplicates and self-loops
    /// are dropped silently.
    pub fn from_token_edges<'a, I>(edges: I) -> Graph
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut builder = GraphBuilder::new();
        for (a, b) in edges {
            builder.edge(a, b);
        }
        builder.build().0
    }

    pub fn num_nodes(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Σ k_i, i.e. twice the edge count.
    pub fn degree_sum(&self) -> usize {
        self.neighbors.len()
    }

    #[inline]
    pub fn degree(&self, node: NodeId) -> usize {
        self.offsets[node.index() + 1] - self.offsets[node.index()]
    }

    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[node.index()]..self.offsets[node.index() + 1]]
    }

    /// Position of `node`'s adjacency run in the flat neighbour array. The
    /// directed edge `node -> neighbors(node)[j]` has id `edge_offset(node) + j`.
    #[inline]
    pub fn edge_offset(&self, node: NodeId) -> usize {
        self.offsets[node.index()]
    }

    #[inline]
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.num_nodes()).map(NodeId::from)
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    /// Each undirected edge once, as `(a, b)` with `a < b`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |a| {
            self.neighbors(a)
                .iter()
                .copied()
                .filter(move |&b| a < b)
                .map(move |b| (a, b))
        })
    }

    pub fn token(&self, node: NodeId) -> &str {
        &self.tokens[node.index()]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn node_id(&self, token: &str) -> Option<NodeId> {
        self.index.get(token).copied()
    }

    pub fn label(&self, node: NodeId) -> Option<u32> {
        self.labels[node.index()]
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn num_labelled(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn summary(&self) -> GraphSummary {
        let (min_degree, max_degree) = self
            .degrees()
            .fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let n = self.num_nodes();
        GraphSummary {
            nodes: n,
            edges: self.num_edges(),
            classes: self.num_classes(),
            min_degree: if n == 0 { 0 } else { min_degree },
            max_degree,
            mean_degree: if n == 0 {
                0.0
            } else {
                self.degree_sum() as f64 / n as f64
            },
        }
    }

    /// Replaces the label assignment. `labels` must have one entry per node
    /// and every class id must index `names`.
    pub fn with_labels(mut self, labels: Vec<Option<u32>>, names: Vec<String>) -> Result<Graph> {
        if labels.len() != self.num_nodes() {
            return Err(Error::InvalidConfig(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes()
            )));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&c| c as usize >= names.len()) {
            return Err(Error::InvalidConfig(format!(
                "class id {bad} has no name"
            )));
        }
        self.labels = labels;
        self.label_names = names;
        Ok(self)
    }

    /// Same node set, tokens and labels, with the given undirected edges
    /// removed. Pairs are matched in either orientation.
    pub fn without_edges(&self, removed: &[(NodeId, NodeId)]) -> Graph {
        let removed: HashSet<(NodeId, NodeId)> =
            removed.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let kept: Vec<_> = self.edges().filter(|e| !removed.contains(e)).collect();
        Graph::assemble(
            self.tokens.clone(),
            self.index.clone(),
            &kept,
            self.labels.clone(),
            self.label_names.clone(),
        )
    }

    /// Writes one `a b` line per undirected edge using the original tokens.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (a, b) in self.edges() {
            writeln!(out, "{} {}", self.token(a), self.token(b))?;
        }
        Ok(())
    }

    /// Component id per node (in order of each component's lowest node) and
    /// the size of every component.
    pub fn connected_components(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.num_nodes();
        let mut component = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for root in 0..n {
            if component[root] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            component[root] = id;
            queue.push_back(NodeId::from(root));
            while let Some(v) = queue.pop_front() {
                size += 1;
                for &w in self.neighbors(v) {
                    if component[w.index()] == usize::MAX {
                        component[w.index()] = id;
                        queue.push_back(w);
                    }
                }
            }
            sizes.push(size);
        }
        (component, sizes)
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().1.len() <= 1
    }
}

/// Loads a whitespace-separated edge list (CORA/CiteSeer `.cites` layout).
/// Lines that are empty or start with `#` are ignored.
pub fn load_edge_list(path: &Path, opts: LoadOptions) -> Result<(Graph, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut builder = GraphBuilder::new();
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut report = LoadReport::default();

    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        report.lines = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: lineno,
                message: format!("expected two node tokens, got {trimmed:?}"),
            });
        };
        if a == b && !opts.drop_self_loops {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: lineno,
                message: format!("self-loop on {a}"),
            });
        }
        let (x, y) = builder.edge(a, b);
        if !opts.deduplicate && x != y && !seen.insert((x.min(y), x.max(y))) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: lineno,
                message: format!("duplicate edge {a} {b}"),
            });
        }
    }

    let (graph, stats) = builder.build();
    if graph.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    report.nodes = graph.num_nodes();
    report.edges = graph.num_edges();
    report.duplicates_removed = stats.duplicates_removed;
    report.self_loops_removed = stats.self_loops_removed;
    log::info!(
        "loaded {}: {} nodes, {} edges ({} duplicates, {} self-loops removed)",
        path.display(),
        report.nodes,
        report.edges,
        report.duplicates_removed,
        report.self_loops_removed
    );
    Ok((graph, report))
}

/// Attaches class labels from a `<node> <class>` file. `.content` rows are
/// accepted too: the first field is the node and the last field the class.
pub fn load_labels(path: &Path, graph: Graph) -> Result<(Graph, LabelReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "expected a node token and a class token".into(),
            });
        }
        pairs.push((fields[0].to_owned(), fields[fields.len() - 1].to_owned()));
    }
    let (graph, report) = attach_labels(graph, pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())));
    if report.matched == 0 {
        return Err(Error::NoLabelsMatched(path.to_owned()));
    }
    if report.skipped > 0 {
        log::warn!(
            "{}: {} label lines did not match a graph node",
            path.display(),
            report.skipped
        );
    }
    Ok((graph, report))
}

/// Replaces the graph's labels with `(node token, class token)` pairs. Class
/// ids follow first appearance among matched pairs.
pub fn attach_labels<'a, I>(mut graph: Graph, pairs: I) -> (Graph, LabelReport)
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut labels = vec![None; graph.num_nodes()];
    let mut names: Vec<String> = Vec::new();
    let mut class_ids: HashMap<&str, u32> = HashMap::new();
    let mut report = LabelReport::default();
    for (node, class) in pairs {
        let Some(id) = graph.node_id(node) else {
            report.skipped += 1;
            continue;
        };
        if labels[id.index()].is_some() {
            report.skipped += 1;
            continue;
        }
        let c = *class_ids.entry(class).or_insert_with(|| {
            names.push(class.to_owned());
            (names.len() - 1) as u32
        });
        labels[id.index()] = Some(c);
        report.matched += 1;
    }
    report.classes = names.len();
    graph.labels = labels;
    graph.label_names = names;
    (graph, report)
}

/// Subgraph induced on the largest connected component with ids re-densified
/// in their original order. The second value maps new ids to old ids. Ties go
/// to the component containing the lowest node id.
pub fn largest_connected_component(graph: &Graph) -> (Graph, Vec<NodeId>) {
    let (component, sizes) = graph.connected_components();
    let Some(best) = sizes
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
        .map(|(i, _)| i)
    else {
        return (graph.clone(), Vec::new());
    };
    let remap: Vec<NodeId> = graph
        .nodes()
        .filter(|v| component[v.index()] == best)
        .collect();
    let mut new_id = vec![None; graph.num_nodes()];
    for (new, old) in remap.iter().enumerate() {
        new_id[old.index()] = Some(NodeId::from(new));
    }
    let tokens: Vec<String> = remap.iter().map(|&v| graph.token(v).to_owned()).collect();
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), NodeId::from(i)))
        .collect();
    let edges: Vec<_> = graph
        .edges()
        .filter_map(|(a, b)| Some((new_id[a.index()]?, new_id[b.index()]?)))
        .collect();
    let labels = remap.iter().map(|&v| graph.label(v)).collect();
    let sub = Graph::assemble(tokens, index, &edges, labels, graph.label_names.clone());
    (sub, remap)
}

/// Zachary's karate club (1-based member numbering as tokens "1".."34").
const KARATE_EDGES: [(u32, u32); 78] = [
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7), (1, 8), (1, 9), (1, 11), (1, 12),
    (1, 13), (1, 14), (1, 18), (1, 20), (1, 22), (1, 32), (2, 3), (2, 4), (2, 8), (2, 14),
    (2, 18), (2, 20), (2, 22), (2, 31), (3, 4), (3, 8), (3, 9), (3, 10), (3, 14), (3, 28),
    (3, 29), (3, 33), (4, 8), (4, 13), (4, 14), (5, 7), (5, 11), (6, 7), (6, 11), (6, 17),
    (7, 17), (9, 31), (9, 33), (9, 34), (10, 34), (14, 34), (15, 33), (15, 34), (16, 33),
    (16, 34), (19, 33), (19, 34), (20, 34), (21, 33), (21, 34), (23, 33), (23, 34),
    (24, 26), (24, 28), (24, 30), (24, 33), (24, 34), (25, 26), (25, 28), (25, 32),
    (26, 32), (27, 30), (27, 34), (28, 34), (29, 32), (29, 34), (30, 33), (30, 34),
    (31, 33), (31, 34), (32, 33), (32, 34), (33, 34),
];

/// Faction after the split: 0 = instructor ("Mr. Hi"), 1 = administrator.
const KARATE_FACTIONS: [u32; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1,
    1, 1, 1, 1,
];

/// The karate club network with its two-faction ground truth. Node `i` has
/// token `i + 1`.
pub fn karate_club() -> Graph {
    let mut builder = GraphBuilder::new();
    for member in 1..=34 {
        builder.node(&member.to_string());
    }
    for (a, b) in KARATE_EDGES {
        builder.edge(&a.to_string(), &b.to_string());
    }
    let (graph, _) = builder.build();
    let labels = KARATE_FACTIONS.iter().map(|&f| Some(f)).collect();
    graph
        .with_labels(labels, vec!["Mr. Hi".into(), "Officer".into()])
        .expect("static karate labels")
}
