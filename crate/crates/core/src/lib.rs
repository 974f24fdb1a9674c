//! Degree-proportional random-walk scheduling for node2vec-style graph
//! embeddings.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] loads and normalises undirected graphs and extracts the largest
//!   connected component.
//! * [`walk`] builds second-order (p, q) transition samplers and generates walk
//!   corpora under a fixed or degree-proportional schedule.
//! * [`embedding`] trains skip-gram with negative sampling on a corpus.
//! * [`scalefree`] holds the power-law degree formulas used to reason about
//!   walk budgets.
//! * [`eval`] measures embeddings: cosine neighbours, classical MDS, k-means,
//!   node classification and link prediction.
//! * [`bench`] drives full strategy × walk-length × seed grids from a plan file.

pub mod bench;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod sampling;
pub mod scalefree;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use walk::{WalkConfig, WalkCorpus, WalkStrategy};
